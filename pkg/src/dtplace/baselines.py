"""Comparison strategies sharing the instance, samples, and feasibility rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import Placement
from .domain import Instance
from .errors import ConfigurationError, NoFeasibleState
from .saa import SaaParams, SampleSet, allowed_overloads
from .search import SearchState, hill_climb, make_state, random_feasible_state
from .seeding import child_seed


@dataclass(frozen=True)
class BaselineResult:
    best_state: SearchState
    states_visited: int


def _trial_seed(seed: int, trial: int) -> int:
    return child_seed(seed, f"trial/{trial}")


def baseline_random_best(
    inst: Instance, samples: SampleSet, params: SaaParams, trials: int, seed: int
) -> BaselineResult:
    """Best of ``trials`` independent random feasible states."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    best: SearchState | None = None
    for i in range(trials):
        state = random_feasible_state(inst, samples, params, _trial_seed(seed, i))
        if best is None or state.eval.total < best.eval.total:
            best = state
    assert best is not None
    return BaselineResult(best_state=best, states_visited=trials)


def baseline_restart_hillclimb(
    inst: Instance, samples: SampleSet, params: SaaParams, trials: int, seed: int
) -> BaselineResult:
    """Cost descent from each of the same ``trials`` random starts; best endpoint.

    Start states match :func:`baseline_random_best` draw for draw, so its
    result can never beat this one on the same seed.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    best: SearchState | None = None
    visited = 0
    for i in range(trials):
        start = random_feasible_state(inst, samples, params, _trial_seed(seed, i))
        endpoint, _, stats = hill_climb(inst, samples, params, start)
        visited += stats.states_visited
        if best is None or endpoint.eval.total < best.eval.total:
            best = endpoint
    assert best is not None
    return BaselineResult(best_state=best, states_visited=visited)


def baseline_nearest(inst: Instance, samples: SampleSet, params: SaaParams) -> BaselineResult:
    """Deterministic distance greedy: components go to the closest server that
    keeps every overload count within budget, spilling outward when saturated.

    Devices and components are processed in index order; candidate servers in
    increasing server-device distance, ties by server index.
    """
    budget = allowed_overloads(params)
    S = inst.num_servers
    cap = inst.capacities
    assignment = np.full(inst.total_components, -1, dtype=np.int64)
    load = np.zeros((S, samples.theta))
    for k in range(inst.total_components):
        d = int(inst.component_device[k])
        ranked = np.argsort(inst.dist_server_device[:, d], kind="stable")
        placed = False
        for s in ranked:
            cand = load[s] + inst.cost_rates[s] * samples.cycles[k]
            if (cand > cap[s]).sum() <= budget:
                assignment[k] = s
                load[s] = cand
                placed = True
                break
        if not placed:
            raise NoFeasibleState(
                f"distance greedy cannot place component {k} within the overload budget"
            )
    state = make_state(inst, samples, params, Placement(tuple(int(s) for s in assignment)))
    if not (state.profile.overload_count <= budget).all():
        raise NoFeasibleState("distance greedy produced an over-budget placement")
    return BaselineResult(best_state=state, states_visited=1)
