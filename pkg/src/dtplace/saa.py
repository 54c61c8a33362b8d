"""Monte Carlo scenario sampling and empirical overload accounting.

The probabilistic capacity constraint is replaced by counting, per server,
the scenarios in which the sampled computation cost exceeds capacity. A
placement is accepted when every server's overload count stays within the
integer budget floor(epsilon * theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Instance
from .errors import ConfigurationError
from .costs import Placement
from .seeding import stream


@dataclass(frozen=True)
class SaaParams:
    """Risk factors and sample count.

    alpha: acceptable overload probability of the original problem.
    epsilon: stricter empirical budget applied to the sampled problem.
    theta: number of Monte Carlo scenarios.
    """

    alpha: float
    epsilon: float
    theta: int

    def __post_init__(self):
        if not 0 < self.epsilon <= self.alpha < 1:
            raise ConfigurationError(
                f"need 0 < epsilon <= alpha < 1, got epsilon={self.epsilon}, alpha={self.alpha}"
            )
        if self.theta < 1:
            raise ConfigurationError(f"theta must be >= 1, got {self.theta}")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Sampled CPU-cycle demands, shape (total_components, theta).

    Rows follow the instance's flat component order.
    """

    cycles: np.ndarray

    def __post_init__(self):
        self.cycles.setflags(write=False)

    @property
    def theta(self) -> int:
        return self.cycles.shape[1]

    def for_component(self, inst: Instance, d: int, c: int) -> np.ndarray:
        return self.cycles[inst.flat_index(d, c)]


def allowed_overloads(params: SaaParams) -> int:
    """Per-server budget of overloaded scenarios: floor(epsilon * theta)."""
    # The epsilon guard keeps the floor exact when epsilon*theta is integral
    # but not representable (e.g. 0.3 * 10).
    return math.floor(params.epsilon * params.theta + 1e-9)


def draw_samples(inst: Instance, params: SaaParams, seed: int) -> SampleSet:
    """Independent draws of each component's cycle demand across scenarios.

    Entries are normal around the component's mean with a 20% relative
    spread, resampled until positive. Deterministic in (inst, params, seed).
    """
    rng = stream(seed, "samples")
    means = inst.component_mean_cycles[:, None]
    cycles = rng.normal(means, 0.2 * means, size=(inst.total_components, params.theta))
    while True:
        bad = cycles <= 0
        n_bad = int(bad.sum())
        if n_bad == 0:
            break
        rows = np.nonzero(bad)[0]
        cycles[bad] = rng.normal(
            inst.component_mean_cycles[rows], 0.2 * inst.component_mean_cycles[rows]
        )
    return SampleSet(cycles=cycles)


@dataclass(frozen=True, eq=False)
class OverloadProfile:
    """Per-server overload accounting over one sample set."""

    overload_count: np.ndarray  # (S,) scenarios with positive excess
    proportion: np.ndarray  # (S,) count / theta
    worst_excess: np.ndarray  # (S,) max over scenarios of load - capacity
    theta: int

    def __post_init__(self):
        for arr in (self.overload_count, self.proportion, self.worst_excess):
            arr.setflags(write=False)


def load_matrix(inst: Instance, samples: SampleSet, assignment: np.ndarray) -> np.ndarray:
    """(S, theta) computation cost per server per scenario."""
    load = np.zeros((inst.num_servers, samples.theta))
    for s in range(inst.num_servers):
        members = assignment == s
        if members.any():
            load[s] = inst.cost_rates[s] * samples.cycles[members].sum(axis=0)
    return load


def server_load(inst: Instance, samples: SampleSet, pl: Placement, s: int, theta: int) -> float:
    """Computation cost of server s in scenario theta under placement pl."""
    a = pl.array()
    members = a == s
    if not members.any():
        return 0.0
    return float(inst.cost_rates[s] * samples.cycles[members, theta].sum())


def overload_excess(inst: Instance, samples: SampleSet, pl: Placement, s: int, theta: int) -> float:
    """Signed load minus capacity; positive means an overload in this scenario."""
    return server_load(inst, samples, pl, s, theta) - float(inst.capacities[s])


def overload_profile(
    inst: Instance, samples: SampleSet, pl: Placement, params: SaaParams
) -> OverloadProfile:
    """Count, per server, the scenarios whose load strictly exceeds capacity."""
    load = load_matrix(inst, samples, pl.array())
    excess = load - inst.capacities[:, None]
    counts = (excess > 0).sum(axis=1).astype(np.int64)
    return OverloadProfile(
        overload_count=counts,
        proportion=counts / samples.theta,
        worst_excess=excess.max(axis=1),
        theta=samples.theta,
    )


def is_feasible(profile: OverloadProfile, params: SaaParams) -> bool:
    """True iff every server's overload count is within the integer budget."""
    return bool((profile.overload_count <= allowed_overloads(params)).all())


def approx_success_prob(params: SaaParams) -> float:
    """Probability that the sampled problem's feasible set is conservative.

    Grows with theta and with the alpha-epsilon gap; equals 0 when the two
    risk factors coincide.
    """
    gap = params.alpha - params.epsilon
    return 1.0 - math.exp(-params.theta * gap * gap / (2.0 * params.epsilon))
