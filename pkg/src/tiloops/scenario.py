"""Experiment definitions and seeded trial execution.

A trial is decided by one uniform draw against the weight of the branch-mode
transaction. Everything downstream of that draw (relocated absorbers, the
second confirmation, the certainty of the relocated outcome, the remnant
advanced wave) follows deterministically from whether the branch succeeded.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Mapping

import numpy as np

from . import waves
from .exceptions import InvalidScenario, InvariantViolation, NonNormalizedState
from .rng import TrialStream, first_uniforms

__all__ = [
    "NULL_OUTCOME",
    "Setting",
    "ProbeResult",
    "Relocation",
    "Absorber",
    "Timeline",
    "Scenario",
    "Confirmation",
    "TrialRecord",
    "FrequencyTable",
    "outcome_label",
    "build_maudlin",
    "build_trivial",
    "run_trial",
    "run_batch",
    "iter_trials",
    "bilking_probe",
    "pre_emission_view",
]

NULL_OUTCOME = "null"
_DEFAULT_CHUNK = 1 << 16


class Setting(str, Enum):
    """Augmented emitter state: confirmations from every absorber, or from the unrelocated ones only."""

    PSI_C = "psi_C"
    PSI_C_PRIME = "psi_C_prime"


class ProbeResult(str, Enum):
    NO_DETECTION = "NoDetection"


def outcome_label(mode: str | None) -> str:
    return NULL_OUTCOME if mode is None else f"{mode}_d"


def _label(x) -> str:
    return x.value if isinstance(x, Enum) else str(x)


@dataclass(frozen=True)
class Relocation:
    """Move an absorber when the branch transaction fails (checked at ``trigger_time``)."""

    trigger_time: float
    new_position: float
    new_mode: str


@dataclass(frozen=True)
class Absorber:
    id: str
    position: float
    mode: str
    relocation: Relocation | None = None

    def relocated(self) -> "Absorber":
        if self.relocation is None:
            return self
        return Absorber(self.id, self.relocation.new_position, self.relocation.new_mode)


@dataclass(frozen=True)
class Timeline:
    t0: float = 0.0
    t1: float = 1.0
    t2: float = 2.0

    def __post_init__(self):
        if not (self.t0 < self.t1 < self.t2):
            raise InvalidScenario(f"timeline must satisfy t0 < t1 < t2, got {self.t0}, {self.t1}, {self.t2}")


def _unblocked(absorbers) -> list[Absorber]:
    # An absorber is shadowed by any nearer absorber on the same side of the emitter.
    out = []
    for a in absorbers:
        side = math.copysign(1.0, a.position)
        if not any(
            b is not a and math.copysign(1.0, b.position) == side and abs(b.position) < abs(a.position)
            for b in absorbers
        ):
            out.append(a)
    return out


@dataclass(frozen=True)
class Scenario:
    basis: tuple[str, ...]
    emitter_state: tuple[tuple[str, complex], ...]
    absorbers: tuple[Absorber, ...]
    timeline: Timeline
    branch_mode: str
    name: str = "custom"

    def __post_init__(self):
        state = self.emitter_state
        if isinstance(state, Mapping):
            state = state.items()
        object.__setattr__(self, "emitter_state", tuple((str(m), complex(a)) for m, a in state))
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "absorbers", tuple(self.absorbers))

    @property
    def state(self) -> dict[str, complex]:
        return dict(self.emitter_state)

    @property
    def has_loop(self) -> bool:
        """True when some absorber's configuration depends on the outcome."""
        return any(a.relocation is not None for a in self.absorbers)

    def weight(self, mode: str) -> Fraction | float:
        return waves.born_weight(self.state.get(mode, 0j))

    def fingerprint(self) -> str:
        from .scenario_file import dumps_scenario

        return hashlib.sha256(dumps_scenario(self).encode()).hexdigest()[:16]

    def validate(self) -> "Scenario":
        """Raise :class:`InvalidScenario` on the first broken invariant; return ``self`` otherwise."""
        basis = self.basis
        if not basis or len(set(basis)) != len(basis):
            raise InvalidScenario("basis must be a non-empty sequence of distinct modes")
        state_modes = [m for m, _ in self.emitter_state]
        if state_modes != list(basis):
            raise InvalidScenario(f"emitter state modes {state_modes} do not match basis {list(basis)}")
        try:
            waves.emit_offer(self.state)
        except NonNormalizedState as exc:
            raise InvalidScenario(f"emitter state: {exc}") from None
        if self.branch_mode not in basis:
            raise InvalidScenario(f"branch mode {self.branch_mode!r} not in basis")

        ids = [a.id for a in self.absorbers]
        if len(set(ids)) != len(ids):
            raise InvalidScenario("absorber ids must be unique")
        for a in self.absorbers:
            if a.mode not in basis:
                raise InvalidScenario(f"absorber {a.id!r}: mode {a.mode!r} not in basis")
            if not math.isfinite(a.position) or a.position == 0:
                raise InvalidScenario(f"absorber {a.id!r}: position must be finite and non-zero")
            r = a.relocation
            if r is None:
                continue
            if r.new_mode not in basis:
                raise InvalidScenario(f"absorber {a.id!r}: relocation mode {r.new_mode!r} not in basis")
            if not math.isfinite(r.new_position) or r.new_position == 0:
                raise InvalidScenario(f"absorber {a.id!r}: relocation position must be finite and non-zero")
            if not (self.timeline.t0 < r.trigger_time <= self.timeline.t2):
                raise InvalidScenario(f"absorber {a.id!r}: relocation trigger must lie in (t0, t2]")
        for group in (self.absorbers, [a.relocated() for a in self.absorbers]):
            positions = [a.position for a in group]
            if len(set(positions)) != len(positions):
                raise InvalidScenario("absorber positions must be distinct")

        movers = [a for a in self.absorbers if a.relocation is not None]
        if len(movers) > 1:
            raise InvalidScenario("at most one absorber may carry a relocation rule")
        confirmed = {a.mode for a in _unblocked(self.absorbers)}
        if self.branch_mode not in confirmed:
            raise InvalidScenario(f"branch mode {self.branch_mode!r} is not confirmed by any unblocked absorber")
        if confirmed - {self.branch_mode}:
            raise InvalidScenario(
                f"modes {sorted(confirmed - {self.branch_mode})} are confirmed before the branch point; "
                "only the branch mode may be"
            )
        for a in movers:
            target = a.relocation.new_mode
            if target == self.branch_mode:
                raise InvalidScenario(f"absorber {a.id!r}: relocation cannot target the branch mode")
            remaining = 1.0 - float(self.weight(self.branch_mode))
            if abs(float(self.weight(target)) - remaining) > waves.TOL:
                raise InvalidScenario(
                    f"absorber {a.id!r}: relocation mode {target!r} does not carry all remaining offer amplitude"
                )
        return self


@dataclass(frozen=True)
class Confirmation:
    absorber: str
    mode: str
    amplitude: complex
    relocated: bool = False


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    branch_succeeded: bool
    realized: str | None
    setting: Setting
    remnant: dict[str, complex]
    rng_seed: int
    confirmations: tuple[Confirmation, ...] = ()
    draws: int = 1

    @property
    def outcome(self) -> str:
        return outcome_label(self.realized)

    def confirmation_from(self, absorber_id: str) -> Confirmation | None:
        for c in self.confirmations:
            if c.absorber == absorber_id:
                return c
        return None


@dataclass(frozen=True)
class _Branch:
    realized: str | None
    setting: Setting
    remnant: dict[str, complex]
    confirmations: tuple[Confirmation, ...]


@dataclass(frozen=True)
class _Plan:
    weight: Fraction | float
    threshold: float
    success: _Branch
    failure: _Branch

    def record(self, succeeded: bool, trial_index: int, seed: int, draws: int = 1) -> TrialRecord:
        b = self.success if succeeded else self.failure
        return TrialRecord(
            trial_index, succeeded, b.realized, b.setting, dict(b.remnant), seed, b.confirmations, draws
        )


def _threshold(weight) -> float:
    # Uniforms are k / 2**53, so u < weight iff u < ceil(weight * 2**53) / 2**53, which is exact in float.
    scaled = Fraction(weight) * (1 << 53)
    return math.ceil(scaled) / float(1 << 53)


def _confirm(offer: waves.WaveSet, absorbers, relocated_ids=()) -> tuple[waves.WaveSet, tuple[Confirmation, ...]]:
    retarded = {c.mode: c for c in offer.select(kind=waves.Kind.OFFER, direction=waves.Direction.RETARDED)}
    cw = waves.WaveSet()
    records = []
    for a in absorbers:
        resp = waves.respond_confirmation(retarded[a.mode], a.id)
        cw = cw | resp
        adv = resp.select(direction=waves.Direction.ADVANCED).components[0]
        records.append(Confirmation(a.id, a.mode, adv.amplitude, a.id in relocated_ids))
    return cw, tuple(records)


@functools.lru_cache(maxsize=64)
def _plan(s: Scenario) -> _Plan:
    s.validate()
    offer = waves.emit_offer(s.state)
    weight = s.weight(s.branch_mode)

    initial = _unblocked(s.absorbers)
    cw, confs = _confirm(offer, initial)
    success = _Branch(s.branch_mode, Setting.PSI_C_PRIME, waves.emitter_advanced_remnant(offer, cw), confs)

    movers = {a.id for a in s.absorbers if a.relocation is not None}
    after = _unblocked([a.relocated() for a in s.absorbers])
    cw_after, confs_after = _confirm(offer, after, movers)
    relocated_modes = [c.mode for c in confs_after if c.relocated]
    if relocated_modes:
        failure = _Branch(
            relocated_modes[0], Setting.PSI_C, waves.emitter_advanced_remnant(offer, cw_after), confs_after
        )
    else:
        # Nothing new confirms: the failed branch transaction is a null outcome.
        failure = _Branch(None, Setting.PSI_C_PRIME, waves.emitter_advanced_remnant(offer, cw), confs)
    return _Plan(weight, _threshold(weight), success, failure)


def build_maudlin() -> Scenario:
    """Source in an equal L/R superposition; A at +1, B at +2 swings to -2 if A stays silent."""
    amp = math.sqrt(0.5)
    timeline = Timeline(0.0, 1.0, 2.0)
    return Scenario(
        basis=("L", "R"),
        emitter_state={"L": amp, "R": amp},
        absorbers=(
            Absorber("A", 1.0, "R"),
            Absorber("B", 2.0, "R", Relocation(timeline.t1, -2.0, "L")),
        ),
        timeline=timeline,
        branch_mode="R",
        name="maudlin",
    )


def build_trivial() -> Scenario:
    """Maudlin's setup with detector B removed."""
    return dataclasses.replace(
        build_maudlin(),
        absorbers=(Absorber("A", 1.0, "R"),),
        name="trivial",
    )


def run_trial(s: Scenario, seed: int, trial_index: int) -> TrialRecord:
    plan = _plan(s)
    stream = TrialStream(seed, trial_index)
    u = stream.uniform()
    return plan.record(u < plan.threshold, trial_index, stream.seed, stream.position)


def _successes(seed: int, start: int, stop: int, threshold: float) -> np.ndarray:
    return first_uniforms(seed, np.arange(start, stop, dtype=np.uint64)) < threshold


def _chunks(n: int, chunk_size: int):
    return [(lo, min(lo + chunk_size, n)) for lo in range(0, n, chunk_size)]


def iter_trials(s: Scenario, seed: int, n: int, chunk_size: int = _DEFAULT_CHUNK) -> Iterator[TrialRecord]:
    """Yield the same records as ``run_trial(s, seed, i)`` for ``i in range(n)``, vectorizing the draws."""
    plan = _plan(s)
    for lo, hi in _chunks(n, chunk_size):
        hits = _successes(seed, lo, hi, plan.threshold)
        for offset, hit in enumerate(hits.tolist()):
            yield plan.record(hit, lo + offset, seed)


@dataclass(frozen=True)
class FrequencyTable:
    """Outcome counts of a batch, keyed jointly by ``(outcome, setting)``."""

    joint: dict[tuple[str, str], int]
    total: int
    scenario: str = ""
    seed: int | None = None
    conditionals: dict[tuple[str, str], Fraction] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.total < 1:
            raise ValueError("total must be positive")
        if sum(self.joint.values()) != self.total:
            raise ValueError("joint counts must sum to total")
        conds = {}
        settings = self.setting_counts
        for (outcome, setting), k in self.joint.items():
            if settings[setting]:
                conds[(outcome, setting)] = Fraction(k, settings[setting])
        object.__setattr__(self, "conditionals", conds)

    @property
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (outcome, _), k in self.joint.items():
            out[outcome] = out.get(outcome, 0) + k
        return out

    @property
    def setting_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (_, setting), k in self.joint.items():
            out[setting] = out.get(setting, 0) + k
        return out

    def setting_count(self, setting) -> int:
        return self.setting_counts.get(_label(setting), 0)

    def count(self, outcome: str, setting: str | None = None) -> int:
        if setting is None:
            return self.counts.get(outcome, 0)
        return self.joint.get((outcome, _label(setting)), 0)

    def frequency(self, outcome: str) -> Fraction:
        return Fraction(self.count(outcome), self.total)

    def conditional(self, outcome: str, setting: str) -> Fraction:
        setting = _label(setting)
        denom = self.setting_counts.get(setting, 0)
        if not denom:
            raise ZeroDivisionError(f"no trials with setting {setting!r}")
        return Fraction(self.count(outcome, setting), denom)


def run_batch(
    s: Scenario, seed: int, n: int, *, workers: int = 1, chunk_size: int = _DEFAULT_CHUNK
) -> FrequencyTable:
    """Aggregate ``n`` trials. Counts do not depend on ``workers`` or ``chunk_size``."""
    if n < 1:
        raise ValueError("n must be positive")
    plan = _plan(s)
    spans = _chunks(n, chunk_size)

    def count(span):
        return int(np.count_nonzero(_successes(seed, span[0], span[1], plan.threshold)))

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(count, spans))
    else:
        hits = sum(map(count, spans))

    joint: dict[tuple[str, str], int] = {}
    for branch, k in ((plan.success, hits), (plan.failure, n - hits)):
        key = (outcome_label(branch.realized), branch.setting.value)
        joint[key] = joint.get(key, 0) + k
    return FrequencyTable(joint, n, s.fingerprint(), seed)


def pre_emission_view(record: TrialRecord) -> dict:
    """Record fields an observer before emission could in principle access.

    The remnant also lives before emission but cannot be detected, so it is
    left out; so are the realized outcome and the relocated confirmation,
    which only exist after the branch point.
    """
    return {
        "trial_index": record.trial_index,
        "rng_seed": record.rng_seed,
        "draws": record.draws,
        "initial_confirmations": tuple(c for c in record.confirmations if not c.relocated),
    }


def bilking_probe(s: Scenario, record: TrialRecord) -> ProbeResult:
    """Try to read the trial's outcome off the remnant advanced wave before emission.

    Engaging the remnant in a transaction needs a retarded offer exactly in
    phase with it, and no such offer can be prepared without already knowing
    the outcome, so the probe never detects anything. As a consistency
    check, the pre-emission view of ``record`` is compared with that of the
    opposite branch of the same trial.
    """
    plan = _plan(s)
    expected = plan.record(record.branch_succeeded, record.trial_index, record.rng_seed, record.draws)
    if record != expected:
        raise InvariantViolation(f"record {record.trial_index} was not produced by this scenario", record.rng_seed)
    other = plan.record(not record.branch_succeeded, record.trial_index, record.rng_seed, record.draws)
    mine, theirs = pre_emission_view(record), pre_emission_view(other)
    for key in mine:
        if mine[key] != theirs[key]:
            raise InvariantViolation(
                f"pre-emission field {key!r} differs between branches of trial {record.trial_index}",
                record.rng_seed,
            )
    # No phase-locked retarded offer exists before emission, so no transaction can engage the remnant.
    return ProbeResult.NO_DETECTION
