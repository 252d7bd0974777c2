"""Adaptive-corruption bookkeeping for the balls-into-bins analyses.

Balls are nodes: blue is honest, red is adversary-controlled. The
adversary may hold at most a ``capacity_fraction`` share of all balls,
counting both what it controls and what it is currently attacking. To
start an attack it must therefore retire control of as many balls as it
targets; the retired balls stop counting against capacity immediately but
keep their color until the attack lands. An attack takes exactly
``t_takeover`` rounds, cannot be aborted, and on completion the targets
turn red while the retired balls turn blue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class AttackError(Exception):
    """Attack plan violates the adversary's constraints."""


@dataclass(frozen=True)
class Attack:
    targets: np.ndarray
    releases: np.ndarray
    started: int
    completes: int


@dataclass
class AdversaryState:
    n: int
    capacity: int
    t_takeover: int
    red: np.ndarray = field(init=False)
    under_attack: np.ndarray = field(init=False)
    released: np.ndarray = field(init=False)
    in_flight: list[Attack] = field(default_factory=list)
    launched: int = 0
    completed: int = 0
    peak_usage: int = 0

    def __post_init__(self) -> None:
        self.red = np.zeros(self.n, dtype=bool)
        self.under_attack = np.zeros(self.n, dtype=bool)
        self.released = np.zeros(self.n, dtype=bool)

    def seed_red(self, indices: np.ndarray) -> None:
        self.red[indices] = True
        self.peak_usage = max(self.peak_usage, self.capacity_used())

    def active_controlled(self) -> np.ndarray:
        return self.red & ~self.released

    def capacity_used(self) -> int:
        return int(self.active_controlled().sum() + self.under_attack.sum())

    def launch(self, targets: np.ndarray, releases: np.ndarray, round: int) -> Attack:
        if targets.size == 0 or targets.size != releases.size:
            raise AttackError("attacks trade control one-for-one, sizes must match")
        if self.red[targets].any() or self.under_attack[targets].any():
            raise AttackError("targets must be blue and not already under attack")
        if not self.red[releases].all() or self.released[releases].any():
            raise AttackError("releases must be controlled red balls")
        self.under_attack[targets] = True
        self.released[releases] = True
        used = self.capacity_used()
        if used > self.capacity:
            self.under_attack[targets] = False
            self.released[releases] = False
            raise AttackError(f"capacity exceeded: {used} > {self.capacity}")
        self.peak_usage = max(self.peak_usage, used)
        attack = Attack(targets, releases, round, round + self.t_takeover)
        self.in_flight.append(attack)
        self.launched += 1
        return attack

    def complete_due(self, round: int) -> list[Attack]:
        """Land every attack whose takeover window ends at ``round``."""
        done = [a for a in self.in_flight if a.completes == round]
        if not done:
            return []
        self.in_flight = [a for a in self.in_flight if a.completes != round]
        for attack in done:
            self.red[attack.targets] = True
            self.under_attack[attack.targets] = False
            self.red[attack.releases] = False
            self.released[attack.releases] = False
            self.completed += 1
        self.peak_usage = max(self.peak_usage, self.capacity_used())
        return done


def plan_attack(
    strategy: str,
    state: AdversaryState,
    bins: np.ndarray,
    m: int,
    attack_size: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Pick targets and releases for one attack, or None if nothing sensible.

    ``adaptive-greedy`` concentrates: it attacks blue balls in the bin that
    is already closest to failing and retires reds from the bin furthest
    from it. ``adaptive-random`` picks both sides uniformly. Both observe
    the full public state.
    """
    blues_free = np.flatnonzero(~state.red & ~state.under_attack)
    reds_free = np.flatnonzero(state.active_controlled())
    k = min(attack_size, blues_free.size, reds_free.size)
    if k == 0:
        return None
    if strategy == "adaptive-random":
        targets = rng.choice(blues_free, size=k, replace=False)
        releases = rng.choice(reds_free, size=k, replace=False)
        return targets, releases
    if strategy != "adaptive-greedy":
        raise AttackError(f"no attack planner for strategy {strategy!r}")

    totals = np.bincount(bins, minlength=m).astype(float)
    red_counts = np.bincount(bins[state.red], minlength=m).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(totals > 0, red_counts / np.maximum(totals, 1), 0.0)
    hot = int(np.argmax(ratio))
    cold = int(np.argmin(ratio))

    hot_blues = blues_free[bins[blues_free] == hot]
    if hot_blues.size >= k:
        targets = hot_blues[:k]
    else:
        spare_blues = blues_free[bins[blues_free] != hot]
        targets = np.concatenate([hot_blues, spare_blues[: k - hot_blues.size]])
    cold_reds = reds_free[bins[reds_free] == cold]
    if cold_reds.size >= k:
        releases = cold_reds[:k]
    else:
        spare_reds = reds_free[bins[reds_free] != cold]
        releases = np.concatenate([cold_reds, spare_reds[: k - cold_reds.size]])
    return targets, releases
