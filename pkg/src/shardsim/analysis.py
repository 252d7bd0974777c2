"""Failure-probability analysis: analytic tail bounds and Monte Carlo.

A shard fails when at least a third of its committee is adversarial. With
a quarter of all nodes red and committees drawn uniformly, a shard of
expected size n/m fails only if its red count runs a quarter high or its
blue count a sixth low; two Chernoff tails give

    Pr[some shard fails in a round] <= 2 m exp(-n / 144 m)

and a union bound over 5.26e11 rounds (one round a minute for a million
years) turns the per-round figure into a durability statement.

The Monte Carlo side replays the committee draw as balls into bins: a
one-shot static experiment for measuring the per-round rate against the
bound, and an iterated process with staggered re-draws (each ball carries
a fixed re-throw slot modulo t_lease) for the leased-membership dynamics,
including adaptive adversaries that take over targeted balls after a
fixed delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .adversary import AdversaryState, plan_attack

# One round a minute for a million years.
ROUNDS_PER_MILLION_YEARS = 5.26e11

_STATIC_STREAM = 10
_ITERATED_STREAM = 11

STRATEGIES = ("none", "static", "adaptive-greedy", "adaptive-random")


def chernoff_tail_bounds(n: int, m: int) -> tuple[float, float]:
    """(blue-count low tail, red-count high tail) for one shard.

    Blue balls: mean 3n/4m, deviation 1/6 below, bound exp(-n/96m).
    Red balls: mean n/4m, deviation 1/4 above, bound exp(-n/144m).
    """
    return math.exp(-n / (96 * m)), math.exp(-n / (144 * m))


def analytic_failure_bound(n: int, m: int) -> float:
    """Per-round bound 2 m exp(-n/144m) on any shard reaching a red third."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return 2 * m * math.exp(-n / (144 * m))


def log10_failure_bound(n: int, m: int) -> float:
    """log10 of the per-round bound, computed in log space for tiny values."""
    return (math.log(2 * m) - n / (144 * m)) / math.log(10)


def million_year_bound(per_round_bound: float) -> float:
    """Union bound over a million years of one-minute rounds."""
    if not 0.0 <= per_round_bound <= 1.0:
        raise ValueError("per-round bound must lie in [0, 1]")
    return per_round_bound * ROUNDS_PER_MILLION_YEARS


def log10_million_year_bound(n: int, m: int) -> float:
    return log10_failure_bound(n, m) + math.log10(ROUNDS_PER_MILLION_YEARS)


def bound_table(rows: Iterable[tuple[int, int]]) -> list[dict]:
    """One table row per (n, m): the bound, its companions, and log10 forms."""
    out = []
    for n, m in rows:
        blue_tail, red_tail = chernoff_tail_bounds(n, m)
        per_round = analytic_failure_bound(n, m)
        out.append(
            {
                "n": n,
                "m": m,
                "n_per_shard": n / m,
                "blue_tail": blue_tail,
                "red_tail": red_tail,
                "per_round_bound": per_round,
                "log10_per_round": log10_failure_bound(n, m),
                "million_year_bound": million_year_bound(min(1.0, per_round)),
                "log10_million_year": log10_million_year_bound(n, m),
            }
        )
    return out


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """95% (by default) Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def _failing_bins(red_counts: np.ndarray, total_counts: np.ndarray) -> np.ndarray:
    # Failure: red/(red+blue) >= 1/3 with at least one red present.
    return (3 * red_counts >= total_counts) & (red_counts > 0)


@dataclass(frozen=True)
class StaticBinsResult:
    n: int
    m: int
    red_fraction: float
    trials: int
    failures: int
    seed: int
    rate: float
    wilson_low: float
    wilson_high: float
    analytic_bound: float
    mean_red_ratio: float


def mc_static_failure_rate(
    n: int,
    m: int,
    red_fraction: float = 0.25,
    trials: int = 10_000,
    seed: int = 0,
    chunk: int = 200_000,
) -> StaticBinsResult:
    """One-shot experiment: throw reds and blues uniformly, count failures.

    A trial fails when any bin's red share reaches one third. Vectorized
    over trials in chunks to bound memory.
    """
    if not 0.0 <= red_fraction < 1.0:
        raise ValueError("red_fraction must lie in [0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _STATIC_STREAM]))
    n_red = int(red_fraction * n)
    n_blue = n - n_red
    pvals = np.full(m, 1.0 / m)
    failures = 0
    ratio_sum = 0.0
    ratio_count = 0
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        reds = rng.multinomial(n_red, pvals, size=size)
        blues = rng.multinomial(n_blue, pvals, size=size)
        totals = reds + blues
        failures += int(_failing_bins(reds, totals).any(axis=1).sum())
        occupied = totals > 0
        ratio_sum += float((reds[occupied] / totals[occupied]).sum())
        ratio_count += int(occupied.sum())
        done += size
    rate = failures / trials
    low, high = wilson_interval(failures, trials)
    return StaticBinsResult(
        n,
        m,
        red_fraction,
        trials,
        failures,
        seed,
        rate,
        low,
        high,
        analytic_failure_bound(n, m),
        ratio_sum / ratio_count if ratio_count else 0.0,
    )


@dataclass
class IteratedBinsResult:
    n: int
    m: int
    t_lease: int
    rounds: int
    strategy: str
    seed: int
    failure_rounds: list[int] = field(default_factory=list)
    captures: dict[int, np.ndarray] = field(default_factory=dict)
    mean_red_ratio: float = 0.0
    attacks_launched: int = 0
    attacks_completed: int = 0
    capacity: int = 0
    peak_capacity_used: int = 0

    @property
    def failures(self) -> int:
        return len(self.failure_rounds)


def mc_iterated_lazy(
    n: int,
    m: int,
    t_lease: int,
    rounds: int,
    strategy: str = "static",
    red_fraction: float = 0.25,
    t_takeover: Optional[int] = None,
    attack_size: Optional[int] = None,
    seed: int = 0,
    capture_rounds: Sequence[int] = (),
    stats_every: int = 0,
) -> IteratedBinsResult:
    """Iterated process with staggered re-draws and an optional adversary.

    Every ball carries a fixed slot in [0, t_lease); in round r exactly the
    balls with slot r mod t_lease re-draw their bin uniformly. Round 1
    throws everyone. Failure is evaluated after each round's re-draw and
    again after any attack completions; a round counts once however many
    bins fail. ``capture_rounds`` snapshots the full assignment at the
    named rounds for distribution tests.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    adaptive = strategy.startswith("adaptive")
    if adaptive:
        if t_takeover is None:
            raise ValueError("adaptive strategies need t_takeover")
        if t_lease > t_takeover:
            raise ValueError("adaptive strategies require t_lease <= t_takeover")
    if t_lease < 1 or rounds < 1:
        raise ValueError("t_lease and rounds must be positive")

    rng = np.random.default_rng(np.random.SeedSequence([seed, _ITERATED_STREAM]))
    n_red = 0 if strategy == "none" else int(red_fraction * n)
    state = AdversaryState(n, n_red, t_takeover or 0)
    if n_red:
        state.seed_red(rng.choice(n, size=n_red, replace=False))
    slots = rng.integers(0, t_lease, n)
    groups = [np.flatnonzero(slots == s) for s in range(t_lease)]
    bins = rng.integers(0, m, n)
    if attack_size is None:
        attack_size = max(1, n_red // (2 * max(1, t_takeover or 1)))

    result = IteratedBinsResult(n, m, t_lease, rounds, strategy, seed, capacity=n_red)
    wanted = set(capture_rounds)
    ratio_sum = 0.0
    ratio_count = 0

    def check(r: int) -> bool:
        red_counts = np.bincount(bins[state.red], minlength=m)
        totals = np.bincount(bins, minlength=m)
        return bool(_failing_bins(red_counts, totals).any())

    def maybe_launch(r: int) -> None:
        plan = plan_attack(strategy, state, bins, m, attack_size, rng)
        if plan is not None:
            state.launch(plan[0], plan[1], r)

    for r in range(1, rounds + 1):
        if r > 1:
            movers = groups[r % t_lease]
            if movers.size:
                bins[movers] = rng.integers(0, m, movers.size)
        failed = check(r)
        if adaptive and state.complete_due(r):
            failed = check(r) or failed
        if failed:
            result.failure_rounds.append(r)
        if adaptive:
            maybe_launch(r)
        if r in wanted:
            result.captures[r] = bins.copy()
        if stats_every and r % stats_every == 0:
            red_counts = np.bincount(bins[state.red], minlength=m)
            totals = np.bincount(bins, minlength=m)
            occupied = totals > 0
            ratio_sum += float((red_counts[occupied] / totals[occupied]).sum())
            ratio_count += int(occupied.sum())

    result.mean_red_ratio = ratio_sum / ratio_count if ratio_count else 0.0
    result.attacks_launched = state.launched
    result.attacks_completed = state.completed
    result.peak_capacity_used = state.peak_usage
    return result


def binomial_one_sided_pvalue(higher: int, lower: int) -> float:
    """P[Bin(higher+lower, 1/2) >= higher]: is ``higher`` significantly larger?

    Exact conditional test for comparing two matched failure counts; with
    no divergence between the processes the split is symmetric.
    """
    total = higher + lower
    if total == 0:
        return 1.0
    acc = 0.0
    for k in range(higher, total + 1):
        acc += math.comb(total, k)
    return acc / 2.0**total
