"""Acceptance criteria, runnable from pytest or ``tiloops verify``.

Each check returns a :class:`CriterionResult`; :func:`run_acceptance` prints
one PASS/FAIL line per criterion. Full mode uses 100 000 trials per batch and
a +-0.0063 frequency band; quick mode uses 10 000 trials and +-0.02.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable

import numpy as np

from . import analysis, scenario, waves
from .scenario import ProbeResult, Setting

__all__ = ["CriterionResult", "AcceptanceContext", "CRITERIA", "run_acceptance"]

N_SEEDS = 20
FULL_TRIALS, FULL_BAND = 100_000, 0.0063
QUICK_TRIALS, QUICK_BAND = 10_000, 0.02
FULL_COIN_TRIALS, QUICK_COIN_TRIALS = 1_000_000, 100_000
RUNTIME_BUDGET_S = 5.0
INV_SQRT2 = 0.7071067811865476


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  [{self.number:2d}] {self.name}: {self.detail}"


class AcceptanceContext:
    """Shared batches and trial records, built lazily once per run."""

    def __init__(self, seed: int = 42, quick: bool = False):
        self.seed = seed
        self.quick = quick
        self.trials = QUICK_TRIALS if quick else FULL_TRIALS
        self.band = QUICK_BAND if quick else FULL_BAND
        self.coin_trials = QUICK_COIN_TRIALS if quick else FULL_COIN_TRIALS
        self.maudlin = scenario.build_maudlin()
        self.trivial = scenario.build_trivial()

    @property
    def seeds(self) -> list[int]:
        return [(self.seed + k) & analysis.U64_MAX for k in range(N_SEEDS)]

    @cached_property
    def maudlin_batches(self) -> tuple[list[scenario.FrequencyTable], float]:
        start = time.perf_counter()
        batches = [scenario.run_batch(self.maudlin, s, self.trials) for s in self.seeds]
        return batches, time.perf_counter() - start

    @cached_property
    def maudlin_records(self) -> list[scenario.TrialRecord]:
        return list(scenario.iter_trials(self.maudlin, self.seed, self.trials))

    @cached_property
    def trivial_records(self) -> list[scenario.TrialRecord]:
        return list(scenario.iter_trials(self.trivial, self.seed, self.trials))


def _maudlin_unconditional(ctx: AcceptanceContext) -> tuple[bool, str]:
    batches, elapsed = ctx.maudlin_batches
    worst = 0.0
    for b in batches:
        for outcome in ("R_d", "L_d"):
            worst = max(worst, abs(float(b.frequency(outcome)) - 0.5))
    ok = worst <= ctx.band and elapsed < RUNTIME_BUDGET_S
    return ok, (
        f"{len(batches)} seeds x N={ctx.trials}: max |f - 0.5| = {worst:.5f} (band {ctx.band}); "
        f"{elapsed:.2f}s (budget {RUNTIME_BUDGET_S}s)"
    )


def _maudlin_certainty(ctx: AcceptanceContext) -> tuple[bool, str]:
    batches, _ = ctx.maudlin_batches
    bad = [b.seed for b in batches if b.count("L_d", Setting.PSI_C) != b.setting_count(Setting.PSI_C)]
    psi_c = [r for r in ctx.maudlin_records if r.setting is Setting.PSI_C]
    record_ok = all(r.realized == "L" for r in psi_c)
    return not bad and record_ok, (
        f"count(L_d & psi_C) == count(psi_C) on {len(batches) - len(bad)}/{len(batches)} batches; "
        f"{len(psi_c)} psi_C records all L_d: {record_ok}"
    )


def _eq2_identity(ctx: AcceptanceContext) -> tuple[bool, str]:
    partition = analysis.big_space_partition(ctx.maudlin)
    value = analysis.big_space_conditional(partition, "L_d", Setting.PSI_C)
    ok = isinstance(value, Fraction) and value == 1
    return ok, f"P(L_d | psi_C) = {value!r}"


def _remnant(ctx: AcceptanceContext) -> tuple[bool, str]:
    r_branch = l_branch = 0
    ok = True
    for r in ctx.maudlin_records:
        if r.realized == "R":
            r_branch += 1
            ok &= set(r.remnant) == {"L"} and abs(r.remnant["L"] - (-INV_SQRT2)) <= waves.TOL
        else:
            l_branch += 1
            ok &= r.remnant == {}
    return ok, f"{r_branch} R-branch records carry {{L: -1/sqrt2}}, {l_branch} L-branch records carry {{}}"


def _confirmation_wholeness(ctx: AcceptanceContext) -> tuple[bool, str]:
    target = math.sqrt(analysis.many_spaces_probability(ctx.maudlin, "psi", "L"))
    worst = 0.0
    count = 0
    for r in ctx.maudlin_records:
        if r.setting is not Setting.PSI_C:
            continue
        count += 1
        cw = r.confirmation_from("B")
        worst = max(worst, abs(cw.amplitude - INV_SQRT2) if cw is not None else math.inf)
    ok = count > 0 and worst <= waves.TOL and abs(target - INV_SQRT2) <= waves.TOL
    return ok, f"{count} psi_C trials: max |CW_B - 1/sqrt2| = {worst:.1e}; sqrt(P_psi(L)) = {target!r}"


def _trivial_null(ctx: AcceptanceContext) -> tuple[bool, str]:
    batch = scenario.run_batch(ctx.trivial, ctx.seed, ctx.trials)
    f = float(batch.frequency(scenario.NULL_OUTCOME))
    accounted = batch.count("R_d") + batch.count(scenario.NULL_OUTCOME) == batch.total
    return abs(f - 0.5) <= ctx.band and accounted, f"f(null) = {f:.5f} at N={ctx.trials} (band {ctx.band})"


def _coin_loop(ctx: AcceptanceContext) -> tuple[bool, str]:
    violations = 0
    for i in range(ctx.coin_trials):
        rec = analysis.coin_loop_trial(ctx.seed, i)
        if rec.toss_occurred and not rec.heads:
            violations += 1
    p = analysis.COIN_HEADS_PROBABILITY
    ok = violations == 0 and float(p) == 0.5
    return ok, f"{violations} toss-without-heads records in {ctx.coin_trials}; P_A(heads) = {float(p)}"


def _cancellation(ctx: AcceptanceContext) -> tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    n_states = 1000
    for _ in range(n_states):
        size = int(rng.integers(1, 7))
        z = rng.normal(size=size) + 1j * rng.normal(size=size)
        z /= np.linalg.norm(z)
        state = {f"m{k}": complex(a) for k, a in enumerate(z)}
        offer = waves.emit_offer(state)
        cws = waves.WaveSet()
        for comp in offer.select(kind=waves.Kind.OFFER, direction=waves.Direction.RETARDED):
            cws = cws | waves.respond_confirmation(comp, f"abs-{comp.mode}")
        for (_, _, support), amp in waves.field(offer | cws).items():
            if support is not waves.Support.CONNECTING_WORLDLINE:
                worst = max(worst, abs(amp))
    return worst <= waves.TOL, f"{n_states} random states, bases 1-6: max residual {worst:.1e}"


def _bilking(ctx: AcceptanceContext) -> tuple[bool, str]:
    checked = 0
    ok = True
    for s, records in ((ctx.maudlin, ctx.maudlin_records), (ctx.trivial, ctx.trivial_records)):
        for r in records:
            ok &= scenario.bilking_probe(s, r) is ProbeResult.NO_DETECTION
            checked += 1
    return ok, f"NoDetection on {checked} trials; pre-emission fields identical across branches"


def _determinism(ctx: AcceptanceContext) -> tuple[bool, str]:
    from .cli import main

    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            path = os.path.join(tmp, f"run{k}.csv")
            code = main(["--scenario", "maudlin", "--trials", str(FULL_TRIALS), "--seed", "42", "--output", path])
            if code != 0:
                return False, f"run {k} exited with {code}"
            with open(path, "rb") as fh:
                outputs.append(fh.read())
    same = outputs[0] == outputs[1]
    return same, f"two runs, {len(outputs[0])} bytes each, identical: {same}"


CRITERIA: list[tuple[int, str, Callable[[AcceptanceContext], tuple[bool, str]]]] = [
    (1, "maudlin-unconditional-frequencies", _maudlin_unconditional),
    (2, "maudlin-certainty-conditional", _maudlin_certainty),
    (3, "big-space-conditional-identity", _eq2_identity),
    (4, "remnant-advanced-wave", _remnant),
    (5, "confirmation-amplitude-wholeness", _confirmation_wholeness),
    (6, "trivial-null-outcome", _trivial_null),
    (7, "coin-toss-loop", _coin_loop),
    (8, "cancellation-property", _cancellation),
    (9, "bilking-inaccessibility", _bilking),
    (10, "determinism", _determinism),
]


def evaluate(number: int, ctx: AcceptanceContext) -> CriterionResult:
    for num, name, check in CRITERIA:
        if num == number:
            try:
                passed, detail = check(ctx)
            except Exception as exc:  # a crashing criterion is a failing criterion
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            return CriterionResult(num, name, bool(passed), detail)
    raise KeyError(number)


def run_acceptance(seed: int = 42, quick: bool = False, echo: Callable[[str], None] | None = print) -> list[CriterionResult]:
    ctx = AcceptanceContext(seed, quick)
    results = []
    for num, _, _ in CRITERIA:
        result = evaluate(num, ctx)
        if echo is not None:
            echo(result.line())
        results.append(result)
    return results
