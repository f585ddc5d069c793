import cmath
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiloops.exceptions import NonNormalizedState, NotAnOffer, OrphanConfirmation
from tiloops.waves import (
    TOL,
    Direction,
    Kind,
    Support,
    WaveComponent,
    WaveSet,
    born_weight,
    emit_offer,
    emitter_advanced_remnant,
    field,
    respond_confirmation,
    superpose,
    transaction_weights,
)
from fractions import Fraction

from conftest import INV_SQRT2

EQ1 = {"L": INV_SQRT2, "R": INV_SQRT2}


def retarded(offer, mode):
    return next(
        c for c in offer if c.kind is Kind.OFFER and c.direction is Direction.RETARDED and c.mode == mode
    )


def confirm(offer, modes, prefix="abs"):
    out = WaveSet()
    for m in modes:
        out = out | respond_confirmation(retarded(offer, m), f"{prefix}-{m}")
    return out


@st.composite
def normalized_states(draw, min_size=1, max_size=6):
    n = draw(st.integers(min_size, max_size))
    parts = draw(
        st.lists(
            st.tuples(st.floats(-1, 1, allow_nan=False), st.floats(-1, 1, allow_nan=False)),
            min_size=n, max_size=n,
        )
    )
    amps = [complex(a, b) for a, b in parts]
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps))
    if norm < 1e-3:
        amps = [1 + 0j] + [0j] * (n - 1)
        norm = 1.0
    return {f"m{k}": a / norm for k, a in enumerate(amps)}


class TestEmitOffer:
    def test_equal_superposition(self):
        offer = emit_offer(EQ1)
        assert len(offer) == 4
        ret = offer.select(direction=Direction.RETARDED)
        adv = offer.select(direction=Direction.ADVANCED)
        assert {c.mode: c.amplitude for c in ret} == pytest.approx({"L": INV_SQRT2, "R": INV_SQRT2}, abs=TOL)
        assert {c.mode: c.amplitude for c in adv} == pytest.approx({"L": -INV_SQRT2, "R": -INV_SQRT2}, abs=TOL)
        assert all(c.support is Support.CONNECTING_WORLDLINE for c in ret)
        assert all(c.support is Support.PRE_EMISSION for c in adv)
        assert all(c.kind is Kind.OFFER for c in offer)

    def test_single_mode(self):
        offer = emit_offer({"R": 1})
        assert [(c.direction, c.amplitude) for c in offer] == [(Direction.RETARDED, 1), (Direction.ADVANCED, -1)]

    def test_unequal_real_amplitudes(self):
        offer = emit_offer({"L": 0.6, "R": 0.8})
        assert [c.amplitude for c in offer.select(direction=Direction.RETARDED)] == [0.6, 0.8]
        assert [c.amplitude for c in offer.select(direction=Direction.ADVANCED)] == [-0.6, -0.8]

    def test_advanced_part_is_minus_conjugate(self):
        offer = emit_offer({"L": 0.6j, "R": 0.8})
        adv = {c.mode: c.amplitude for c in offer.select(direction=Direction.ADVANCED)}
        assert adv["L"] == 0.6j

    @pytest.mark.parametrize("state", [{"L": 0.5, "R": 0.5}, {}, {"R": float("nan")}, {"R": 1.0 + 1e-9}])
    def test_rejects_non_normalized(self, state):
        with pytest.raises(NonNormalizedState):
            emit_offer(state)


class TestRespondConfirmation:
    def test_confirmation_from_a_is_conjugate(self):
        cw = respond_confirmation(retarded(emit_offer(EQ1), "R"), "A")
        adv = cw.select(direction=Direction.ADVANCED).components
        assert len(adv) == 1
        assert adv[0].mode == "R" and adv[0].kind is Kind.CONFIRMATION
        assert adv[0].support is Support.CONNECTING_WORLDLINE
        assert adv[0].amplitude == pytest.approx(INV_SQRT2, abs=TOL)

    def test_unit_offer(self):
        cw = respond_confirmation(retarded(emit_offer({"L": 1}), "L"), "X")
        assert cw.select(direction=Direction.ADVANCED).components[0].amplitude == 1

    def test_complex_conjugation(self):
        offer = emit_offer({"R": 1j * INV_SQRT2, "L": INV_SQRT2})
        cw = respond_confirmation(retarded(offer, "R"), "A")
        assert cw.select(direction=Direction.ADVANCED).components[0].amplitude == -1j * INV_SQRT2

    def test_post_absorption_part_cancels_offer_continuation(self):
        cw = respond_confirmation(retarded(emit_offer({"R": 0.6, "L": 0.8}), "R"), "A")
        post = cw.select(support=Support.POST_ABSORPTION).components
        assert len(post) == 1 and post[0].direction is Direction.RETARDED and post[0].amplitude == -0.6

    @pytest.mark.parametrize("pick", ["advanced_offer", "confirmation"])
    def test_rejects_non_offers(self, pick):
        offer = emit_offer(EQ1)
        if pick == "advanced_offer":
            comp = offer.select(direction=Direction.ADVANCED).components[0]
        else:
            comp = respond_confirmation(retarded(offer, "L"), "B").components[0]
        with pytest.raises(NotAnOffer):
            respond_confirmation(comp, "A")


class TestSuperpose:
    def adv(self, kind, mode, amp):
        return WaveComponent(kind, Direction.ADVANCED, mode, amp, "x", Support.PRE_EMISSION)

    def test_offer_and_confirmation_cancel(self):
        out = superpose([self.adv(Kind.OFFER, "L", -INV_SQRT2), self.adv(Kind.CONFIRMATION, "L", INV_SQRT2)])
        assert out == {(Direction.ADVANCED, "L", Support.PRE_EMISSION): 0j}

    def test_empty(self):
        assert superpose([]) == {}

    def test_distinct_modes_never_interfere(self):
        out = superpose([self.adv(Kind.OFFER, "L", -INV_SQRT2), self.adv(Kind.CONFIRMATION, "R", INV_SQRT2)])
        assert len(out) == 2 and all(abs(v) == pytest.approx(INV_SQRT2) for v in out.values())

    @settings(max_examples=100, deadline=None)
    @given(normalized_states(), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, state, rnd):
        offer = emit_offer(state)
        comps = list(offer | confirm(offer, list(state)[: len(state) // 2 + 1]))
        before = superpose(comps)
        rnd.shuffle(comps)
        assert superpose(comps) == before


class TestRemnant:
    def test_confirmation_from_a_only(self):
        offer = emit_offer(EQ1)
        remnant = emitter_advanced_remnant(offer, confirm(offer, ["R"]))
        assert list(remnant) == ["L"]
        assert remnant["L"] == pytest.approx(-INV_SQRT2, abs=TOL)

    def test_complete_absorbers(self):
        offer = emit_offer(EQ1)
        assert emitter_advanced_remnant(offer, confirm(offer, ["L", "R"])) == {}

    def test_no_confirmations(self):
        assert emitter_advanced_remnant(emit_offer({"R": 1}), WaveSet()) == {"R": -1}

    @settings(max_examples=200, deadline=None)
    @given(normalized_states(), st.data())
    def test_zero_iff_every_mode_confirmed(self, state, data):
        modes = list(state)
        chosen = data.draw(st.lists(st.sampled_from(modes), unique=True))
        offer = emit_offer(state)
        remnant = emitter_advanced_remnant(offer, confirm(offer, chosen))
        uncovered = {m for m in modes if m not in chosen and abs(state[m]) > TOL}
        assert set(remnant) == uncovered


class TestTransactionWeights:
    def test_single_absorber(self):
        offer = emit_offer(EQ1)
        weights, null = transaction_weights(offer, confirm(offer, ["R"]))
        assert [w.mode for w in weights] == ["R"]
        assert weights[0].weight == pytest.approx(0.5, abs=TOL)
        assert null == pytest.approx(0.5, abs=TOL)

    def test_complete_set(self):
        offer = emit_offer(EQ1)
        weights, null = transaction_weights(offer, confirm(offer, ["L", "R"]))
        # oracle: 1/2 + 1/2 = 1
        assert [w.weight for w in weights] == pytest.approx([0.5, 0.5], abs=TOL)
        assert null == pytest.approx(0.0, abs=TOL) and null >= 0

    def test_certainty(self):
        offer = emit_offer({"R": 1})
        weights, null = transaction_weights(offer, confirm(offer, ["R"]))
        assert weights[0].weight == 1 and null == 0

    def test_orphan_confirmation(self):
        offer = emit_offer({"R": 1})
        stray = respond_confirmation(retarded(emit_offer({"L": 1}), "L"), "B")
        with pytest.raises(OrphanConfirmation):
            transaction_weights(offer, stray)

    @settings(max_examples=200, deadline=None)
    @given(normalized_states(), st.data())
    def test_weights_and_null_sum_to_one(self, state, data):
        chosen = data.draw(st.lists(st.sampled_from(list(state)), unique=True))
        offer = emit_offer(state)
        weights, null = transaction_weights(offer, confirm(offer, chosen))
        assert math.fsum(w.weight for w in weights) + null == pytest.approx(1.0, abs=TOL)
        assert all(0 <= w.weight <= 1 for w in weights) and null >= 0


@settings(max_examples=200, deadline=None)
@given(normalized_states())
def test_confirmation_is_bitwise_conjugate(state):
    offer = emit_offer(state)
    for m in state:
        off = retarded(offer, m)
        cw = respond_confirmation(off, "A").select(direction=Direction.ADVANCED).components[0]
        assert cw.amplitude.real == off.amplitude.real
        assert cw.amplitude.imag == -off.amplitude.imag


@settings(max_examples=200, deadline=None)
@given(normalized_states())
def test_complete_absorbers_leave_only_the_standing_wave(state):
    offer = emit_offer(state)
    total = field(offer | confirm(offer, list(state)))
    for (direction, mode, support), amp in total.items():
        if support is not Support.CONNECTING_WORLDLINE:
            assert abs(amp) <= TOL
        elif direction is Direction.ADVANCED:
            assert amp == state[mode].conjugate()


def test_standing_wave_weight_is_born_weight():
    offer = emit_offer({"L": 0.6, "R": 0.8j})
    total = field(offer | confirm(offer, ["L", "R"]))
    for mode, psi in (("L", 0.6), ("R", 0.8j)):
        ret = total[(Direction.RETARDED, mode, Support.CONNECTING_WORLDLINE)]
        adv = total[(Direction.ADVANCED, mode, Support.CONNECTING_WORLDLINE)]
        assert (adv * ret).real == pytest.approx(abs(psi) ** 2)


@pytest.mark.parametrize(
    "amp, expected",
    [(INV_SQRT2, Fraction(1, 2)), (0.6, Fraction(9, 25)), (1, Fraction(1)), (cmath.sqrt(1 / 3), Fraction(1, 3))],
)
def test_born_weight_recovers_exact_rationals(amp, expected):
    assert born_weight(amp) == expected


def test_born_weight_falls_back_to_float():
    amp = math.sqrt(math.pi / 4)
    w = born_weight(amp)
    assert isinstance(w, float) and w == pytest.approx(math.pi / 4, abs=TOL)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(direction=Direction.RETARDED, support=Support.PRE_EMISSION, amplitude=0.5),
        dict(direction=Direction.ADVANCED, support=Support.POST_ABSORPTION, amplitude=0.5),
        dict(direction=Direction.RETARDED, support=Support.CONNECTING_WORLDLINE, amplitude=float("inf")),
        dict(direction=Direction.RETARDED, support=Support.CONNECTING_WORLDLINE, amplitude=1.1),
    ],
)
def test_component_invariants(kwargs):
    with pytest.raises(ValueError):
        WaveComponent(kind=Kind.OFFER, mode="L", origin="S", **kwargs)
