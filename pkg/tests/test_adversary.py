"""Attack bookkeeping: capacity, one-for-one trades, exact completion."""

import numpy as np
import pytest

from shardsim.adversary import AdversaryState, AttackError, plan_attack


def _state(n=20, capacity=5, t_takeover=3, reds=(0, 1, 2, 3, 4)):
    state = AdversaryState(n, capacity, t_takeover)
    state.seed_red(np.array(reds, dtype=int))
    return state


def test_launch_and_complete_swap_colors():
    state = _state()
    attack = state.launch(np.array([5, 6]), np.array([0, 1]), round=2)
    assert attack.completes == 5
    assert state.under_attack[[5, 6]].all()
    assert state.released[[0, 1]].all()
    # Released balls keep their color until completion.
    assert state.red[[0, 1]].all()
    assert state.capacity_used() == 5

    assert state.complete_due(4) == []
    done = state.complete_due(5)
    assert [a.started for a in done] == [2]
    assert state.red[[5, 6]].all()
    assert not state.red[[0, 1]].any()
    assert not state.under_attack.any()
    assert not state.released.any()
    assert state.completed == 1


def test_red_population_conserved_by_completion():
    state = _state()
    before = int(state.red.sum())
    state.launch(np.array([7, 8, 9]), np.array([2, 3, 4]), round=1)
    assert int(state.red.sum()) == before
    state.complete_due(4)
    assert int(state.red.sum()) == before


def test_mismatched_sizes_rejected():
    state = _state()
    with pytest.raises(AttackError):
        state.launch(np.array([5, 6]), np.array([0]), round=1)
    with pytest.raises(AttackError):
        state.launch(np.array([], dtype=int), np.array([], dtype=int), round=1)


def test_target_must_be_blue_and_free():
    state = _state()
    with pytest.raises(AttackError):
        state.launch(np.array([0]), np.array([1]), round=1)  # red target
    state.launch(np.array([5]), np.array([0]), round=1)
    with pytest.raises(AttackError):
        state.launch(np.array([5]), np.array([1]), round=1)  # already attacked


def test_release_must_be_active_controlled():
    state = _state()
    with pytest.raises(AttackError):
        state.launch(np.array([5]), np.array([6]), round=1)  # blue release
    state.launch(np.array([5]), np.array([0]), round=1)
    with pytest.raises(AttackError):
        state.launch(np.array([6]), np.array([0]), round=1)  # already released


def test_capacity_exceeded_detected_and_rolled_back():
    # One-for-one trades keep usage flat, so force the capacity branch by
    # seeding at full capacity and then shrinking the budget.
    state = AdversaryState(20, 5, 3)
    state.seed_red(np.array([0, 1, 2, 3, 4]))
    state.capacity = 4
    before_attack = state.under_attack.copy()
    before_released = state.released.copy()
    with pytest.raises(AttackError):
        state.launch(np.array([5]), np.array([0]), round=1)
    assert (state.under_attack == before_attack).all()
    assert (state.released == before_released).all()
    assert state.launched == 0


def test_peak_usage_tracks_maximum():
    state = _state()
    assert state.peak_usage == 5
    state.launch(np.array([5]), np.array([0]), round=1)
    assert state.peak_usage == 5
    state.complete_due(4)
    assert state.peak_usage == 5
    assert state.capacity_used() == 5


def test_plan_attack_greedy_targets_hottest_bin():
    # Red ratios: bin 0 = 2/8 (coldest, holds two reds to retire),
    # bin 1 = 5/8 (hottest, three free blues), bin 2 = 2/4.
    state = _state(n=20, capacity=12, reds=(0, 1, 8, 9, 10, 11, 12, 16, 17))
    rng = np.random.default_rng(0)
    bins = np.array([0] * 8 + [1] * 8 + [2] * 4)
    plan = plan_attack("adaptive-greedy", state, bins, 3, 2, rng)
    assert plan is not None
    targets, releases = plan
    assert len(targets) == len(releases) == 2
    assert set(bins[targets]) == {1}          # blue balls in the hot bin
    assert set(bins[releases]) == {0}         # reds from the cold bin
    state.launch(targets, releases, round=1)  # plan is actually launchable


def test_plan_attack_random_is_launchable():
    state = _state()
    rng = np.random.default_rng(1)
    bins = np.zeros(20, dtype=int)
    plan = plan_attack("adaptive-random", state, bins, 4, 3, rng)
    targets, releases = plan
    assert len(targets) == 3
    assert not state.red[targets].any()
    assert state.red[releases].all()
    state.launch(targets, releases, round=1)


def test_plan_attack_none_when_nothing_to_trade():
    rng = np.random.default_rng(2)
    no_reds = AdversaryState(10, 0, 3)
    assert plan_attack("adaptive-greedy", no_reds, np.zeros(10, int), 2, 4, rng) is None
    all_red = AdversaryState(3, 3, 3)
    all_red.seed_red(np.arange(3))
    assert plan_attack("adaptive-greedy", all_red, np.zeros(3, int), 2, 4, rng) is None


def test_plan_attack_unknown_strategy():
    state = _state()
    rng = np.random.default_rng(3)
    with pytest.raises(AttackError):
        plan_attack("static", state, np.zeros(20, int), 4, 2, rng)
