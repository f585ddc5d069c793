"""Many-spaces vs big-space probabilities for outcome-dependent experiments.

The many-spaces value of an outcome is its intrinsic Born weight read off
the emitter state. The big-space partition splits a single probability
space at the branch transaction: one region where it succeeds, one where it
fails, each tagged with the augmented emitter setting the loop produces in
it. Conditionals on that partition are what the long-run frequencies of a
loop actually track.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from . import waves
from .exceptions import MismatchedScenario, UnknownOutcome, ZeroMeasureSetting
from .rng import U64_MAX
from .scenario import NULL_OUTCOME, FrequencyTable, Scenario, _label, _plan, outcome_label

__all__ = [
    "REPORT_COLUMNS",
    "COIN_HEADS_PROBABILITY",
    "Verdict",
    "ManySpacesAssignment",
    "BigSpaceRegion",
    "ConsistencyReport",
    "CoinLoopRecord",
    "binomial_bound",
    "many_spaces_probability",
    "many_spaces_assignments",
    "big_space_partition",
    "big_space_conditional",
    "coin_loop_trial",
    "coin_loop_batch",
    "coin_loop_report",
    "consistency_report",
    "reports_to_csv",
    "reports_to_json",
]

REPORT_COLUMNS = ("outcome", "many_spaces", "frequency", "conditional", "loop_flag", "verdict")
COIN_HEADS_PROBABILITY = Fraction(1, 2)
SIGMAS = 4


class Verdict(str, Enum):
    CONSISTENT_VIA_CONDITIONAL = "ConsistentViaConditional"
    DIVERGENCE_EXPECTED_IN_LOOP = "DivergenceExpectedInLoop"
    INCONSISTENT = "Inconsistent"


@dataclass(frozen=True)
class ManySpacesAssignment:
    reference_class: tuple[str, str]
    outcome: str
    probability: float


@dataclass(frozen=True)
class BigSpaceRegion:
    label: str
    measure: Fraction | float
    setting: str
    outcome: str


@dataclass(frozen=True)
class ConsistencyReport:
    outcome: str
    setting: str
    many_spaces_value: float
    observed_frequency: Fraction
    big_space_conditional: Fraction | float
    observed_conditional: Fraction
    loop_flag: bool
    verdict: Verdict
    # many-spaces value against the frequency within the outcome's own setting
    class_comparison: Verdict

    def row(self) -> dict:
        return {
            "outcome": self.outcome,
            "many_spaces": float(self.many_spaces_value),
            "frequency": float(self.observed_frequency),
            "conditional": float(self.big_space_conditional),
            "loop_flag": self.loop_flag,
            "verdict": self.verdict.value,
        }


def binomial_bound(p: float, n: int, sigmas: float = SIGMAS) -> float:
    """Half-width ``sigmas * sqrt(p(1-p)/n)`` of the frequency band around ``p``."""
    p = float(p)
    return sigmas * math.sqrt(p * (1.0 - p) / n)


def _as_mode(s: Scenario, outcome: str) -> str | None:
    if outcome == NULL_OUTCOME:
        return None
    mode = outcome[:-2] if outcome.endswith("_d") and outcome[:-2] in s.basis else outcome
    if mode not in s.basis:
        raise UnknownOutcome(f"outcome {outcome!r} is not expressible in basis {list(s.basis)}")
    return mode


def many_spaces_probability(s: Scenario, setting: str, outcome: str) -> float:
    """Intrinsic weight of ``outcome`` within the fixed reference class ``(state, setting)``.

    Reads only the emitter state (plus, for the null outcome, which modes the
    unrelocated absorbers confirm), so relocation rules never change it.
    """
    mode = _as_mode(s, outcome)
    if mode is not None:
        return float(s.weight(mode))
    confirmed = {c.mode for c in _plan(s).success.confirmations}
    return float(1 - sum(Fraction(s.weight(m)) for m in confirmed))


def many_spaces_assignments(s: Scenario, setting: str = "psi") -> list[ManySpacesAssignment]:
    return [ManySpacesAssignment(("psi", setting), outcome_label(m), float(s.weight(m))) for m in s.basis]


def big_space_partition(s: Scenario) -> list[BigSpaceRegion]:
    """Split the big space at the branch transaction; zero-measure regions are dropped."""
    plan = _plan(s)
    w = plan.weight
    branch = outcome_label(s.branch_mode)
    regions = [
        BigSpaceRegion(branch, w, plan.success.setting.value, outcome_label(plan.success.realized)),
        BigSpaceRegion(f"not({branch})", 1 - w, plan.failure.setting.value, outcome_label(plan.failure.realized)),
    ]
    return [r for r in regions if r.measure > 0]


def big_space_conditional(partition: Sequence[BigSpaceRegion], outcome: str, setting: str) -> Fraction | float:
    """``P(outcome | setting) = P(outcome & setting) / P(setting)`` over the partition."""
    setting = _label(setting)
    if outcome != NULL_OUTCOME and not outcome.endswith("_d"):
        outcome = outcome_label(outcome)
    denom = sum(r.measure for r in partition if r.setting == setting)
    if denom == 0:
        raise ZeroMeasureSetting(f"setting {setting!r} has zero measure")
    num = sum(r.measure for r in partition if r.setting == setting and r.outcome == outcome)
    if all(isinstance(r.measure, Fraction) for r in partition):
        return Fraction(num) / Fraction(denom)
    return float(num) / float(denom)


@dataclass(frozen=True)
class CoinLoopRecord:
    toss_occurred: bool
    heads: bool


def _perceives_heads(face: str) -> bool:
    return face == "heads"


def _toss_caused_by(perception: bool) -> bool:
    # backwards-in-time deterministic edge: the perception brings about the toss
    return perception


def _solve_coin_loop() -> CoinLoopRecord:
    # A history containing a toss is self-consistent only if its face yields the perception that causes that toss.
    consistent = [face for face in ("heads", "tails") if _toss_caused_by(_perceives_heads(face))]
    return CoinLoopRecord(toss_occurred=bool(consistent), heads=bool(consistent) and set(consistent) == {"heads"})


_COIN_LOOP = _solve_coin_loop()


def coin_loop_trial(seed: int, i: int) -> CoinLoopRecord:
    """One run of the coin-toss loop. The loop constraint, not the seed, fixes the outcome."""
    if not 0 <= int(seed) <= U64_MAX or i < 0:
        raise ValueError("seed must be a u64 and i non-negative")
    return _COIN_LOOP


def coin_loop_batch(seed: int, n: int) -> FrequencyTable:
    if n < 1:
        raise ValueError("n must be positive")
    joint = {("heads", "toss"): 0, ("tails", "toss"): 0, ("no_toss", "none"): 0}
    for i in range(n):
        r = coin_loop_trial(seed, i)
        if not r.toss_occurred:
            joint[("no_toss", "none")] += 1
        else:
            joint[("heads" if r.heads else "tails", "toss")] += 1
    return FrequencyTable({k: v for k, v in joint.items() if v}, n, "coin-loop", seed)


def coin_loop_report(batch: FrequencyTable) -> list[ConsistencyReport]:
    """Heads: many-spaces 1/2 against a loop conditional ``P(heads | toss) = 1``."""
    many = float(COIN_HEADS_PROBABILITY)
    cond_obs = batch.conditional("heads", "toss")
    big = Fraction(1)
    verdict = Verdict.CONSISTENT_VIA_CONDITIONAL if cond_obs == big else Verdict.DIVERGENCE_EXPECTED_IN_LOOP
    divergent = abs(many - float(cond_obs)) > binomial_bound(many, batch.setting_counts["toss"])
    return [
        ConsistencyReport(
            "heads", "toss", many, batch.frequency("heads"), big, cond_obs, True, verdict,
            Verdict.DIVERGENCE_EXPECTED_IN_LOOP if divergent else Verdict.CONSISTENT_VIA_CONDITIONAL,
        )
    ]


def consistency_report(s: Scenario, batch: FrequencyTable) -> list[ConsistencyReport]:
    """One report per big-space region outcome.

    Without a loop, the unconditional frequency must sit within the binomial
    band around the many-spaces value or the verdict is ``Inconsistent``.
    With a loop, the frequency is checked against the region measure and the
    observed conditional against the big-space conditional; a mismatch there
    is reported as ``DivergenceExpectedInLoop``, never as inconsistency.
    """
    if batch.scenario != s.fingerprint():
        raise MismatchedScenario(f"batch was produced from scenario {batch.scenario}, not {s.fingerprint()}")
    partition = big_space_partition(s)
    loop = s.has_loop
    n = batch.total
    reports = []
    for region in partition:
        many = many_spaces_probability(s, "psi", region.outcome)
        freq = batch.frequency(region.outcome)
        big = big_space_conditional(partition, region.outcome, region.setting)
        try:
            cond_obs = batch.conditional(region.outcome, region.setting)
        except ZeroDivisionError:
            cond_obs = Fraction(0)
        many_ok = abs(many - float(freq)) <= binomial_bound(many, n)
        if not loop:
            verdict = Verdict.CONSISTENT_VIA_CONDITIONAL if many_ok else Verdict.INCONSISTENT
            comparison = verdict
        else:
            region_ok = abs(float(region.measure) - float(freq)) <= binomial_bound(region.measure, n)
            cond_ok = abs(float(cond_obs) - float(big)) <= waves.TOL
            verdict = (
                Verdict.CONSISTENT_VIA_CONDITIONAL if region_ok and cond_ok else Verdict.DIVERGENCE_EXPECTED_IN_LOOP
            )
            setting_n = batch.setting_counts.get(region.setting, 0)
            class_ok = setting_n > 0 and abs(many - float(cond_obs)) <= binomial_bound(many, setting_n)
            comparison = Verdict.CONSISTENT_VIA_CONDITIONAL if class_ok else Verdict.DIVERGENCE_EXPECTED_IN_LOOP
        reports.append(
            ConsistencyReport(region.outcome, region.setting, many, freq, big, cond_obs, loop, verdict, comparison)
        )
    return reports


def reports_to_csv(reports: Sequence[ConsistencyReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for rep in reports:
        row = rep.row()
        writer.writerow(
            [row["outcome"], repr(row["many_spaces"]), repr(row["frequency"]), repr(row["conditional"]),
             "true" if row["loop_flag"] else "false", row["verdict"]]
        )
    return buf.getvalue()


def reports_to_json(reports: Sequence[ConsistencyReport]) -> str:
    return json.dumps([r.row() for r in reports], indent=2) + "\n"
