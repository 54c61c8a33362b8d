"""Learned-restart search: quadratic value regression over descent trajectories.

Each outer iteration runs one cost descent (phase I), then fits a quadratic
model mapping the distance features of every state visited so far to the
cost of the local optimum its trajectory reached. Descending on the model's
prediction from the current optimum (phase II) produces the next start. The
loop stops when consecutive local optima agree to within a relative bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .costs import FeatureVector
from .domain import Instance
from .errors import ConfigurationError
from .saa import SaaParams, SampleSet
from .search import SearchState, Trajectory, hill_climb, random_feasible_state
from .seeding import child_seed

RIDGE_DEFAULT = 1e-8

_INTERCEPT_FREE = np.diag([0.0, 1.0, 1.0, 1.0, 1.0, 1.0])


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """Binary quadratic value surface over standardized distance features.

    ``coefficients`` are (intercept, f1, f2, f1^2, f2^2, f1*f2) applied after
    standardizing each feature by the stored mean and deviation; features
    with zero variance get deviation 1.
    """

    coefficients: np.ndarray  # (6,)
    feature_mean: np.ndarray  # (2,)
    feature_sd: np.ndarray  # (2,)
    ridge: float

    def __post_init__(self):
        for arr in (self.coefficients, self.feature_mean, self.feature_sd):
            arr.setflags(write=False)

    def predict_pair(self, dist_off, dist_com):
        """Predicted value; accepts scalars or equal-shaped arrays."""
        u = (dist_off - self.feature_mean[0]) / self.feature_sd[0]
        v = (dist_com - self.feature_mean[1]) / self.feature_sd[1]
        b = self.coefficients
        return b[0] + b[1] * u + b[2] * v + b[3] * u * u + b[4] * v * v + b[5] * u * v

    def raw_coefficients(self) -> np.ndarray:
        """Equivalent coefficients on unstandardized features, same term order."""
        b = self.coefficients
        m1, m2 = self.feature_mean
        s1, s2 = self.feature_sd
        return np.array(
            [
                b[0]
                - b[1] * m1 / s1
                - b[2] * m2 / s2
                + b[3] * m1 * m1 / (s1 * s1)
                + b[4] * m2 * m2 / (s2 * s2)
                + b[5] * m1 * m2 / (s1 * s2),
                b[1] / s1 - 2.0 * b[3] * m1 / (s1 * s1) - b[5] * m2 / (s1 * s2),
                b[2] / s2 - 2.0 * b[4] * m2 / (s2 * s2) - b[5] * m1 / (s1 * s2),
                b[3] / (s1 * s1),
                b[4] / (s2 * s2),
                b[5] / (s1 * s2),
            ]
        )


def predict(model: QuadraticModel, f: FeatureVector) -> float:
    return float(model.predict_pair(f.dist_off, f.dist_com))


class ValuePredictionObjective:
    """Descend on the model's predicted local-optimum cost."""

    def __init__(self, model: QuadraticModel):
        self.model = model

    def values(self, total, dist_off, dist_com):
        return self.model.predict_pair(dist_off, dist_com)


@dataclass(frozen=True)
class StageConfig:
    delta: float = 0.015  # relative-change convergence bound
    max_iterations: int = 10
    phase2_step_cap: int = 500  # safety cap on the prediction descent

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.phase2_step_cap < 1:
            raise ConfigurationError("phase2_step_cap must be >= 1")


@dataclass(frozen=True)
class StageResult:
    final_state: SearchState  # endpoint of the last cost descent
    best_state: SearchState  # lowest-cost state visited in either phase
    iterations: int
    per_iteration_optima: tuple[float, ...]
    per_iteration_lengths: tuple[int, ...]
    total_states_visited: int  # sum of cost-descent trajectory lengths
    converged: bool


def converged(rho_t: float, rho_prev: float, delta: float) -> bool:
    """Relative-change stopping rule on consecutive local optima.

    False while the previous value is the first-iteration infinity sentinel;
    two exact zeros count as converged.
    """
    if math.isinf(rho_t) or math.isinf(rho_prev):
        return False
    denom = abs(rho_t) + abs(rho_prev)
    if denom == 0.0:
        return True
    return abs(rho_t - rho_prev) / denom < delta


def fit_value_model(all_trajectories: list[Trajectory], ridge: float) -> QuadraticModel:
    """Regularized least squares over the pooled trajectory dataset.

    Every visited state contributes (features -> its trajectory's endpoint
    cost). If the normal system cannot be solved even with the ridge term,
    the degenerate constant model predicting the target mean is returned.
    """
    rows = [
        (p.dist_off, p.dist_com, traj.endpoint_value)
        for traj in all_trajectories
        for p in traj.points
    ]
    if not rows:
        raise ValueError("cannot fit a value model without trajectory data")
    data = np.asarray(rows, dtype=np.float64)
    x, y = data[:, :2], data[:, 2]
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    if np.ptp(y) == 0:
        # Identical targets: the penalized optimum is exactly the constant
        # surface, so skip the solve rather than pick up solver noise.
        beta = np.array([y[0], 0.0, 0.0, 0.0, 0.0, 0.0])
        return QuadraticModel(coefficients=beta, feature_mean=mean, feature_sd=sd, ridge=ridge)
    u = (x[:, 0] - mean[0]) / sd[0]
    v = (x[:, 1] - mean[1]) / sd[1]
    design = np.column_stack([np.ones_like(u), u, v, u * u, v * v, u * v])
    normal = design.T @ design + ridge * _INTERCEPT_FREE
    try:
        beta = np.linalg.solve(normal, design.T @ y)
        if not np.isfinite(beta).all():
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        beta = np.array([y.mean(), 0.0, 0.0, 0.0, 0.0, 0.0])
    return QuadraticModel(coefficients=beta, feature_mean=mean, feature_sd=sd, ridge=ridge)


def stage_search(
    inst: Instance,
    samples: SampleSet,
    params: SaaParams,
    cfg: StageConfig,
    seed: int,
) -> StageResult:
    """Iterated cost descent with learned restarts.

    Starts from a random feasible state. Per iteration: descend on cost,
    record the trajectory, and unless the stopping rule fires, refit the
    value model on all trajectories so far and descend on its prediction
    from the current optimum to obtain the next start.
    """
    best: SearchState | None = None

    def visit(state: SearchState) -> None:
        nonlocal best
        if best is None or state.eval.total < best.eval.total:
            best = state

    start = random_feasible_state(inst, samples, params, seed)
    trajectories: list[Trajectory] = []
    optima: list[float] = []
    lengths: list[int] = []
    rho_prev = math.inf
    did_converge = False
    final = start
    for t in range(1, cfg.max_iterations + 1):
        endpoint, traj, stats = hill_climb(inst, samples, params, start, on_visit=visit)
        trajectories.append(traj)
        optima.append(endpoint.eval.total)
        lengths.append(stats.states_visited)
        final = endpoint
        if converged(endpoint.eval.total, rho_prev, cfg.delta):
            did_converge = True
            break
        if t == cfg.max_iterations:
            break
        model = fit_value_model(trajectories, RIDGE_DEFAULT)
        objective = ValuePredictionObjective(model)
        predicted_start, _, _ = hill_climb(
            inst,
            samples,
            params,
            endpoint,
            objective=objective,
            max_steps=cfg.phase2_step_cap,
            on_visit=visit,
        )
        exogenous_restart = False
        if predicted_start.placement.servers == endpoint.placement.servers:
            # The prediction descent stalled (e.g. a flat model such as the
            # one fitted on a single trajectory): fall back to a random
            # feasible probe, refined by the same prediction descent.
            probe = random_feasible_state(
                inst, samples, params, child_seed(seed, f"stall-restart/{t}")
            )
            predicted_start, _, _ = hill_climb(
                inst,
                samples,
                params,
                probe,
                objective=objective,
                max_steps=cfg.phase2_step_cap,
                on_visit=visit,
            )
            exogenous_restart = (
                predicted_start.placement.servers != endpoint.placement.servers
            )
        start = predicted_start
        # A random restart breaks the chain of consecutive optima that the
        # stopping rule measures; the comparator returns to the sentinel.
        rho_prev = math.inf if exogenous_restart else endpoint.eval.total
    assert best is not None
    return StageResult(
        final_state=final,
        best_state=best,
        iterations=len(optima),
        per_iteration_optima=tuple(optima),
        per_iteration_lengths=tuple(lengths),
        total_states_visited=sum(lengths),
        converged=did_converge,
    )


def write_iteration_log(result: StageResult, path) -> None:
    """Debug export: one row per outer iteration."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "q_t", "rho_t", "converged"])
        last = result.iterations
        for t, (rho, q) in enumerate(
            zip(result.per_iteration_optima, result.per_iteration_lengths), start=1
        ):
            flag = 1 if (result.converged and t == last) else 0
            writer.writerow([t, q, f"{rho:.6f}", flag])
