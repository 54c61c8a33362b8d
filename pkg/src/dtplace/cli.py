"""Command-line interface.

Subcommands: gen, solve, baseline, oracle, experiment, validate. Instances,
sample sets, and solve results are JSON files; experiments emit CSV. Exit
codes: 0 success, 2 configuration error, 3 no feasible placement exists.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .baselines import baseline_nearest, baseline_random_best, baseline_restart_hillclimb
from .costs import placement_from_triples, placement_to_triples
from .domain import GenConfig, Instance, generate_instance, instance_from_dict, instance_to_dict
from .errors import ConfigurationError, NoFeasibleState, SizeCapExceeded
from .harness import ExperimentConfig, run_experiment_full, validate_p1_feasibility
from .oracle import DEFAULT_SIZE_CAP, exact_solve
from .saa import SampleSet, SaaParams, draw_samples
from .stage import StageConfig, stage_search

RISK_DEFAULTS = {"alpha": 0.01, "epsilon": 0.005, "theta": 1850}


def _parse_components(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError as exc:
        raise ConfigurationError(f"components must look like LO..HI, got {text!r}") from exc


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _dump_json(data, path: str | None) -> None:
    text = json.dumps(data, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_instance(path: str) -> Instance:
    data = _load_json(path)
    return instance_from_dict(data["instance"] if "instance" in data else data)


def samples_to_dict(samples: SampleSet, seed: int | None = None) -> dict:
    out = {
        "components": int(samples.cycles.shape[0]),
        "theta": int(samples.cycles.shape[1]),
        "cycles": samples.cycles.tolist(),
    }
    if seed is not None:
        out["seed"] = seed
    return out


def samples_from_dict(data: dict) -> SampleSet:
    cycles = np.array(data["cycles"], dtype=np.float64)
    if cycles.shape != (data["components"], data["theta"]):
        raise ConfigurationError("sample file dimensions do not match its header")
    return SampleSet(cycles=cycles)


def _saa_from_args(args) -> SaaParams:
    return SaaParams(alpha=args.alpha, epsilon=args.epsilon, theta=args.theta)


def _get_samples(inst: Instance, args, params: SaaParams) -> SampleSet:
    if getattr(args, "samples", None):
        samples = samples_from_dict(_load_json(args.samples))
        if samples.cycles.shape[0] != inst.total_components:
            raise ConfigurationError(
                "sample file was drawn for a different number of components"
            )
        return samples
    return draw_samples(inst, params, args.seed)


def _result_record(algorithm, inst, state, *, seed, states_visited, iterations,
                   converged=False, per_iteration_rho=()) -> dict:
    return {
        "algorithm": algorithm,
        "seed": seed,
        "rho": state.eval.total,
        "offload": state.eval.offload,
        "communication": state.eval.communication,
        "cost_per_server": state.eval.total / inst.num_servers,
        "states_visited": states_visited,
        "iterations": iterations,
        "converged": converged,
        "per_iteration_rho": list(per_iteration_rho),
        "max_overload_proportion": float(state.profile.proportion.max()),
        "placement": [list(t) for t in placement_to_triples(inst, state.placement)],
    }


def _cmd_gen(args) -> int:
    cfg = GenConfig(
        num_servers=args.servers,
        num_devices=args.devices,
        components_range=_parse_components(args.components),
        area_side=args.area_side,
    )
    inst = generate_instance(cfg, args.seed)
    _dump_json(
        {
            "seed": args.seed,
            "gen_config": {
                "num_servers": cfg.num_servers,
                "num_devices": cfg.num_devices,
                "components_range": list(cfg.components_range),
                "area_side": cfg.area_side,
            },
            "instance": instance_to_dict(inst),
        },
        args.out,
    )
    return 0


def _cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    params = _saa_from_args(args)
    samples = _get_samples(inst, args, params)
    if args.samples_out:
        _dump_json(samples_to_dict(samples, seed=args.seed), args.samples_out)
    cfg = StageConfig(
        delta=args.delta, max_iterations=args.max_iterations, phase2_step_cap=args.phase2_step_cap
    )
    result = stage_search(inst, samples, params, cfg, args.seed)
    if args.iteration_log:
        from .stage import write_iteration_log

        write_iteration_log(result, args.iteration_log)
    record = _result_record(
        "stage",
        inst,
        result.best_state,
        seed=args.seed,
        states_visited=result.total_states_visited,
        iterations=result.iterations,
        converged=result.converged,
        per_iteration_rho=result.per_iteration_optima,
    )
    record["final_rho"] = result.final_state.eval.total
    _dump_json(record, args.out)
    return 0


def _cmd_baseline(args) -> int:
    inst = _load_instance(args.instance)
    params = _saa_from_args(args)
    samples = _get_samples(inst, args, params)
    if args.which == "random":
        res = baseline_random_best(inst, samples, params, args.trials, args.seed)
        iterations = args.trials
    elif args.which == "restart":
        res = baseline_restart_hillclimb(inst, samples, params, args.trials, args.seed)
        iterations = args.trials
    else:
        res = baseline_nearest(inst, samples, params)
        iterations = 1
    _dump_json(
        _result_record(
            args.which,
            inst,
            res.best_state,
            seed=args.seed,
            states_visited=res.states_visited,
            iterations=iterations,
        ),
        args.out,
    )
    return 0


def _cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    params = _saa_from_args(args)
    samples = _get_samples(inst, args, params)
    result = exact_solve(inst, samples, params, size_cap=args.size_cap)
    if not result.feasible:
        print(f"infeasible (enumerated {result.states_enumerated} placements)")
        return 0
    print(f"optimum: {result.optimum:.6f}")
    print(f"states_enumerated: {result.states_enumerated}")
    for dev, comp, srv in placement_to_triples(inst, result.argmin):
        print(f"device {dev} component {comp} -> server {srv}")
    if args.out:
        _dump_json(
            {
                "optimum": result.optimum,
                "states_enumerated": result.states_enumerated,
                "placement": [list(t) for t in placement_to_triples(inst, result.argmin)],
            },
            args.out,
        )
    return 0


def _cmd_experiment(args) -> int:
    raw = _load_json(args.config)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.replications is not None:
        raw["replications"] = args.replications
    try:
        cfg = ExperimentConfig(
            axis=raw["axis"],
            axis_values=tuple(int(v) for v in raw["axis_values"]),
            num_servers=int(raw.get("num_servers", 6)),
            num_devices=int(raw.get("num_devices", 5)),
            components_range=tuple(raw.get("components_range", [1, 3])),
            replications=int(raw["replications"]),
            master_seed=int(raw["master_seed"]),
            saa=SaaParams(
                alpha=float(raw.get("alpha", RISK_DEFAULTS["alpha"])),
                epsilon=float(raw.get("epsilon", RISK_DEFAULTS["epsilon"])),
                theta=int(raw.get("theta", RISK_DEFAULTS["theta"])),
            ),
            stage=StageConfig(
                delta=float(raw.get("delta", 0.015)),
                max_iterations=int(raw.get("max_iterations", 10)),
                phase2_step_cap=int(raw.get("phase2_step_cap", 500)),
            ),
            baseline_trials=int(raw.get("baseline_trials", 10)),
        )
    except KeyError as exc:
        raise ConfigurationError(f"experiment config is missing key {exc}") from exc
    data = run_experiment_full(cfg)
    from .harness import write_outputs

    sweep, conv = write_outputs(data.rows, data.convergence, args.out)
    print(f"wrote {sweep}")
    print(f"wrote {conv}")
    return 0


def _cmd_validate(args) -> int:
    inst = _load_instance(args.instance)
    data = _load_json(args.placement)
    triples = data["placement"] if isinstance(data, dict) else data
    placement = placement_from_triples(inst, triples)
    proportion = validate_p1_feasibility(
        inst, placement, args.alpha, args.validation_theta, args.seed
    )
    verdict = "pass" if proportion <= args.alpha else "fail"
    print(f"max_overload_proportion: {proportion:.6f}")
    print(f"alpha: {args.alpha}")
    print(f"verdict: {verdict}")
    return 0


def _add_saa_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=RISK_DEFAULTS["alpha"])
    p.add_argument("--epsilon", type=float, default=RISK_DEFAULTS["epsilon"])
    p.add_argument("--theta", type=int, default=RISK_DEFAULTS["theta"])
    p.add_argument("--samples", help="JSON sample-set file (drawn from --seed when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtplace",
        description="Sustainability-aware digital-twin component placement",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--servers", type=int, required=True)
    p.add_argument("--devices", type=int, required=True)
    p.add_argument("--components", required=True, help="range LO..HI, e.g. 1..3")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--area-side", type=float, default=120.0)
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="run the learned-restart search")
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_saa_flags(p)
    p.add_argument("--delta", type=float, default=0.015)
    p.add_argument("--max-iterations", type=int, default=10)
    p.add_argument("--phase2-step-cap", type=int, default=500)
    p.add_argument("--samples-out", help="persist the drawn sample set for replay")
    p.add_argument("--iteration-log", help="write the per-iteration CSV log")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("baseline", help="run a comparison strategy")
    p.add_argument("--which", choices=("random", "restart", "nearest"), required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=10)
    _add_saa_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("oracle", help="exhaustive optimum for tiny instances")
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_saa_flags(p)
    p.add_argument("--size-cap", type=int, default=DEFAULT_SIZE_CAP)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("experiment", help="run a sweep from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--replications", type=int, help="override replications")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("validate", help="fresh-sample overload check of a placement")
    p.add_argument("--instance", required=True)
    p.add_argument("--placement", required=True, help="solve/baseline result JSON")
    p.add_argument("--alpha", type=float, default=RISK_DEFAULTS["alpha"])
    p.add_argument("--validation-theta", type=int, default=20000)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SizeCapExceeded as exc:
        print(f"instance too large: {exc}", file=sys.stderr)
        return 2
    except NoFeasibleState as exc:
        print(f"no feasible placement: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
