"""Offer and confirmation waves over a finite labelled mode basis.

Amplitudes are plain Python ``complex`` values. A :class:`WaveSet` is an
immutable multiset of :class:`WaveComponent` pieces; the physical field is
obtained with :func:`field`, which first adds the implicit continuations
(an advanced confirmation keeps travelling back past the emitter, an absorbed
retarded offer keeps travelling forward past its absorber) and then sums
everything with :func:`superpose`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .exceptions import NonNormalizedState, NotAnOffer, OrphanConfirmation

__all__ = [
    "TOL",
    "Kind",
    "Direction",
    "Support",
    "WaveComponent",
    "WaveSet",
    "TransactionWeight",
    "emit_offer",
    "respond_confirmation",
    "superpose",
    "propagate",
    "field",
    "emitter_advanced_remnant",
    "transaction_weights",
    "born_weight",
]

TOL = 1e-12


class Kind(Enum):
    OFFER = "offer"
    CONFIRMATION = "confirmation"


class Direction(Enum):
    RETARDED = "retarded"
    ADVANCED = "advanced"


class Support(Enum):
    PRE_EMISSION = "pre_emission"
    CONNECTING_WORLDLINE = "connecting_worldline"
    POST_ABSORPTION = "post_absorption"


@dataclass(frozen=True)
class WaveComponent:
    kind: Kind
    direction: Direction
    mode: str
    amplitude: complex
    origin: str
    support: Support

    def __post_init__(self):
        amp = complex(self.amplitude)
        object.__setattr__(self, "amplitude", amp)
        if not cmath.isfinite(amp):
            raise ValueError(f"non-finite amplitude {amp!r} on mode {self.mode!r}")
        if abs(amp) ** 2 > 1 + TOL:
            raise ValueError(f"|amplitude|^2 > 1 on mode {self.mode!r}: {amp!r}")
        if self.support is Support.PRE_EMISSION and self.direction is not Direction.ADVANCED:
            raise ValueError("pre-emission support only carries advanced waves")
        if self.support is Support.POST_ABSORPTION and self.direction is not Direction.RETARDED:
            raise ValueError("post-absorption support only carries retarded waves")

    @property
    def key(self) -> tuple[Direction, str, Support]:
        return (self.direction, self.mode, self.support)


@dataclass(frozen=True)
class WaveSet:
    components: tuple[WaveComponent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __iter__(self) -> Iterator[WaveComponent]:
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __or__(self, other: "WaveSet") -> "WaveSet":
        return WaveSet(self.components + tuple(other))

    def select(self, kind=None, direction=None, support=None) -> "WaveSet":
        return WaveSet(
            c
            for c in self.components
            if (kind is None or c.kind is kind)
            and (direction is None or c.direction is direction)
            and (support is None or c.support is support)
        )

    def modes(self) -> list[str]:
        seen: dict[str, None] = {}
        for c in self.components:
            seen.setdefault(c.mode, None)
        return list(seen)


@dataclass(frozen=True)
class TransactionWeight:
    mode: str
    weight: float


def _check_normalized(state: Mapping[str, complex]) -> None:
    amps = [complex(a) for a in state.values()]
    if not amps or not all(cmath.isfinite(a) for a in amps):
        raise NonNormalizedState("state must hold at least one finite amplitude")
    norm = math.fsum(a.real * a.real + a.imag * a.imag for a in amps)
    if abs(norm - 1.0) > TOL:
        raise NonNormalizedState(f"sum of |amplitude|^2 is {norm!r}, expected 1")


def emit_offer(state: Mapping[str, complex], emitter: str = "S") -> WaveSet:
    """Emit the retarded offer wave and the emitter's advanced wave.

    For every mode the retarded offer carries ``psi`` along the connecting
    worldline; the advanced wave carries ``-conj(psi)`` before emission, so
    that a full-strength confirmation cancels it exactly.
    """
    _check_normalized(state)
    parts = []
    for mode, amp in state.items():
        amp = complex(amp)
        parts.append(
            WaveComponent(Kind.OFFER, Direction.RETARDED, mode, amp, emitter, Support.CONNECTING_WORLDLINE)
        )
        parts.append(
            WaveComponent(Kind.OFFER, Direction.ADVANCED, mode, -amp.conjugate(), emitter, Support.PRE_EMISSION)
        )
    return WaveSet(parts)


def respond_confirmation(offer_component: WaveComponent, absorber_id: str) -> WaveSet:
    """Confirmation returned by an absorber hit by ``offer_component``."""
    if offer_component.kind is not Kind.OFFER or offer_component.direction is not Direction.RETARDED:
        raise NotAnOffer(
            f"expected a retarded offer, got {offer_component.kind.value}/{offer_component.direction.value}"
        )
    amp = offer_component.amplitude
    mode = offer_component.mode
    return WaveSet(
        (
            WaveComponent(
                Kind.CONFIRMATION, Direction.ADVANCED, mode, amp.conjugate(), absorber_id,
                Support.CONNECTING_WORLDLINE,
            ),
            WaveComponent(Kind.CONFIRMATION, Direction.RETARDED, mode, -amp, absorber_id, Support.POST_ABSORPTION),
        )
    )


def superpose(waves: Iterable[WaveComponent]) -> dict[tuple[Direction, str, Support], complex]:
    """Sum amplitudes sharing ``(direction, mode, support)``.

    Offer and confirmation pieces at the same coordinates are one field, so
    ``kind`` is not part of the key. ``math.fsum`` makes the result exactly
    rounded and therefore independent of component order.
    """
    grouped: dict[tuple[Direction, str, Support], list[complex]] = {}
    for c in waves:
        grouped.setdefault(c.key, []).append(c.amplitude)
    out = {}
    for key in sorted(grouped, key=lambda k: (k[0].value, k[1], k[2].value)):
        amps = grouped[key]
        out[key] = complex(math.fsum(a.real for a in amps), math.fsum(a.imag for a in amps))
    return out


def propagate(waves: WaveSet) -> WaveSet:
    """Add the continuations implied by the components already present."""
    absorbed = {
        c.mode
        for c in waves
        if c.kind is Kind.CONFIRMATION and c.direction is Direction.ADVANCED
    }
    extra = []
    for c in waves:
        if c.support is not Support.CONNECTING_WORLDLINE:
            continue
        if c.kind is Kind.CONFIRMATION and c.direction is Direction.ADVANCED:
            extra.append(WaveComponent(c.kind, c.direction, c.mode, c.amplitude, c.origin, Support.PRE_EMISSION))
        elif c.kind is Kind.OFFER and c.direction is Direction.RETARDED and c.mode in absorbed:
            extra.append(WaveComponent(c.kind, c.direction, c.mode, c.amplitude, c.origin, Support.POST_ABSORPTION))
    return waves | WaveSet(extra)


def field(waves: WaveSet) -> dict[tuple[Direction, str, Support], complex]:
    return superpose(propagate(waves))


def emitter_advanced_remnant(offer: WaveSet, confirmations: WaveSet) -> dict[str, complex]:
    """Uncancelled pre-emission advanced field, per mode; empty when absorbers are complete."""
    total = field(offer | confirmations)
    remnant = {}
    for mode in offer.modes():
        amp = total.get((Direction.ADVANCED, mode, Support.PRE_EMISSION), 0j)
        if abs(amp) > TOL:
            remnant[mode] = amp
    return remnant


def transaction_weights(offer: WaveSet, confirmations: WaveSet) -> tuple[list[TransactionWeight], float]:
    """Weights ``conj(psi) * psi`` of the confirmed modes, plus the null probability."""
    offered = {
        c.mode: c.amplitude
        for c in offer
        if c.kind is Kind.OFFER and c.direction is Direction.RETARDED
    }
    confirmed = set()
    for c in confirmations.select(kind=Kind.CONFIRMATION, direction=Direction.ADVANCED):
        if c.mode not in offered:
            raise OrphanConfirmation(f"confirmation from {c.origin!r} answers no offer on mode {c.mode!r}")
        if abs(c.amplitude - offered[c.mode].conjugate()) > TOL:
            raise OrphanConfirmation(
                f"confirmation from {c.origin!r} on mode {c.mode!r} is not the conjugate of the offer"
            )
        confirmed.add(c.mode)
    weights = []
    for mode, amp in offered.items():
        if mode in confirmed:
            w = (amp.conjugate() * amp).real
            weights.append(TransactionWeight(mode, min(max(w, 0.0), 1.0)))
    null = 1.0 - math.fsum(w.weight for w in weights)
    return weights, max(null, 0.0)


def born_weight(amplitude: complex, max_denominator: int = 10_000) -> Fraction | float:
    """``|amplitude|^2`` as an exact fraction when it is one to within 1e-12.

    Amplitudes such as ``1/sqrt(2)`` or ``0.6`` are only approximately
    representable, but their squared magnitudes are simple rationals.
    Anything else comes back as a float.
    """
    w = abs(complex(amplitude)) ** 2
    candidate = Fraction(w).limit_denominator(max_denominator)
    if abs(float(candidate) - w) <= TOL:
        return candidate
    return w
