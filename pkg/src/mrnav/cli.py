"""Experiment runner: single runs, evaluation sweeps, and config validation.

Outputs are structured JSON documents (per-run records plus aggregates) that
are byte-identical across re-runs with the same seed base. Aggregates are
always recomputable from the records; the recomputation helper ships here
and is applied before anything is written.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import tempfile

from . import rng as rngmod
from .dynamics import ControlBounds, NoiseModel
from .mppi import CostWeights
from .orca import OrcaParams
from .policy import load_weights
from .presets import PRESET_NAMES, controller_for
from .projection import SafetyLevels
from .scenarios import circle, mesh, random_scene
from .sim import COLLISION, SUCCESS, SimConfig, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

_SCENARIO_KEYS = {
    "circle": {"kind", "n", "diameter"},
    "mesh": {"kind", "grid_n", "cell_size", "n"},
    "random": {"kind", "n", "area"},
}
_TOP_KEYS = {"scenario", "sweep", "algo", "repetitions", "instances",
             "seed_base", "sim", "planner", "mppi", "costs", "policy", "radius"}
_SIM_KEYS = {"dt", "step_limit", "goal_tolerance", "sigma_v", "sigma_w",
             "v_min", "v_max", "w_min", "w_max"}
_PLANNER_KEYS = {"h_safe", "tau", "reciprocity", "radius_buffer", "delta_u",
                 "delta_nu", "use_safety", "k_neighbors", "sense_range",
                 "tracking_offset", "goal_jitter_std", "preferred_speed"}
_MPPI_KEYS = {"horizon", "n_samples", "n_policy_samples", "lam", "gamma",
              "variance_scale"}
_COST_KEYS = {"goal", "proximity", "proximity_floor", "collision", "reverse",
              "terminal"}
_SWEEP_KEYS = {"kind", "sizes", "algos", "diameter", "cell_size", "area",
               "instances", "repetitions"}


class ConfigError(ValueError):
    pass


def _check_keys(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def validate_config(config: dict) -> list[str]:
    """Return a list of problems; empty means the config is usable."""
    problems = []
    try:
        _normalize(config)
    except ConfigError as exc:
        problems.append(str(exc))
    return problems


def _normalize(config: dict) -> dict:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(config, _TOP_KEYS, "config")
    if ("scenario" in config) == ("sweep" in config):
        raise ConfigError("config needs exactly one of 'scenario' or 'sweep'")

    out = {
        "repetitions": config.get("repetitions", 10),
        "instances": config.get("instances", 1),
        "seed_base": config.get("seed_base", 0),
        "sim": dict(config.get("sim", {})),
        "planner": dict(config.get("planner", {})),
        "mppi": dict(config.get("mppi", {})),
        "costs": dict(config.get("costs", {})),
        "policy": config.get("policy", "proxy"),
        "radius": config.get("radius", 0.3),
    }
    _check_keys(out["sim"], _SIM_KEYS, "sim")
    _check_keys(out["planner"], _PLANNER_KEYS, "planner")
    _check_keys(out["mppi"], _MPPI_KEYS, "mppi")
    _check_keys(out["costs"], _COST_KEYS, "costs")
    for name in ("repetitions", "instances"):
        if not isinstance(out[name], int) or out[name] < 0:
            raise ConfigError(f"{name} must be a nonnegative integer")
    if not isinstance(out["seed_base"], int):
        raise ConfigError("seed_base must be an integer")

    if "scenario" in config:
        scen = dict(config["scenario"])
        kind = scen.get("kind")
        if kind not in _SCENARIO_KEYS:
            raise ConfigError(f"scenario.kind must be one of {sorted(_SCENARIO_KEYS)}")
        _check_keys(scen, _SCENARIO_KEYS[kind], f"scenario({kind})")
        if not isinstance(scen.get("n"), int) or scen["n"] < 1:
            raise ConfigError("scenario.n must be a positive integer")
        algo = config.get("algo", "corl-mppi")
        if algo not in PRESET_NAMES:
            raise ConfigError(f"algo must be one of {PRESET_NAMES}, got {algo!r}")
        out["mode"] = "run"
        out["scenario"] = scen
        out["algo"] = algo
        cells = [(scen, algo)]
    else:
        sweep = dict(config["sweep"])
        _check_keys(sweep, _SWEEP_KEYS, "sweep")
        kind = sweep.get("kind")
        if kind not in _SCENARIO_KEYS:
            raise ConfigError(f"sweep.kind must be one of {sorted(_SCENARIO_KEYS)}")
        sizes = sweep.get("sizes")
        if not isinstance(sizes, list) or not sizes:
            raise ConfigError("sweep.sizes must be a non-empty list")
        algos = sweep.get("algos", list(PRESET_NAMES))
        for algo in algos:
            if algo not in PRESET_NAMES:
                raise ConfigError(f"sweep algo {algo!r} not in {PRESET_NAMES}")
        out["mode"] = "sweep"
        out["instances"] = sweep.get("instances", out["instances"])
        out["repetitions"] = sweep.get("repetitions", out["repetitions"])
        cells = []
        for n in sizes:
            scen = {"kind": kind, "n": n}
            if kind == "circle":
                scen["diameter"] = sweep.get("diameter", 14.0)
            elif kind == "mesh":
                import math
                grid = math.isqrt(n)
                if grid * grid != n:
                    raise ConfigError(f"mesh sweep size {n} is not a square")
                scen["grid_n"] = grid
                scen["cell_size"] = sweep.get("cell_size", 1.5)
            else:
                scen["area"] = sweep.get("area", 40.0)
            for algo in algos:
                cells.append((scen, algo))
    out["cells"] = cells

    # Cross-field checks mirrored from the dataclass validators.
    merged = dict(horizon=10, n_samples=1500, n_policy_samples=450)
    merged.update(out["mppi"])
    if merged["n_policy_samples"] > merged["n_samples"]:
        raise ConfigError("mppi.n_policy_samples exceeds mppi.n_samples")
    if "h_safe" in out["planner"]:
        if not 1 <= out["planner"]["h_safe"] <= merged["horizon"]:
            raise ConfigError("planner.h_safe must lie in [1, mppi.horizon]")
    if isinstance(out["policy"], dict):
        if set(out["policy"]) != {"weights"}:
            raise ConfigError("policy object must be {'weights': path}")
    elif out["policy"] not in ("proxy", "none"):
        raise ConfigError("policy must be 'proxy', 'none', or {'weights': path}")
    return out


def _build_scenario(scen: dict, radius: float, seed: int):
    kind = scen["kind"]
    if kind == "circle":
        return circle(scen["n"], scen.get("diameter", 14.0), seed, radius)
    if kind == "mesh":
        return mesh(scen["grid_n"], scen["cell_size"], scen["n"], seed, radius)
    return random_scene(scen["n"], scen.get("area", 40.0), seed, radius)


def _build_sim_config(norm: dict, algo: str) -> SimConfig:
    sim = norm["sim"]
    bounds = ControlBounds(sim.get("v_min", -1.0), sim.get("v_max", 1.0),
                           sim.get("w_min", -2.0), sim.get("w_max", 2.0))
    noise = NoiseModel(sim.get("sigma_v", 0.1), sim.get("sigma_w", 0.2))
    planner = norm["planner"]
    policy_spec = norm["policy"]
    policy = None
    if algo == "corl-mppi":
        if isinstance(policy_spec, dict):
            policy = load_weights(policy_spec["weights"])
        elif policy_spec == "proxy":
            policy = "proxy"
        else:
            raise ConfigError("corl-mppi requires policy 'proxy' or weights")

    mppi_over = dict(norm["mppi"])
    planner_over = {}
    if algo != "orca-dd":
        for key in ("h_safe", "use_safety", "k_neighbors", "sense_range"):
            if key in planner:
                planner_over[key] = planner[key]
        orca_kwargs = {k: planner[k] for k in ("tau", "reciprocity", "radius_buffer")
                       if k in planner}
        if orca_kwargs:
            planner_over["orca"] = OrcaParams(**orca_kwargs)
        level_kwargs = {k: planner[k] for k in ("delta_u", "delta_nu") if k in planner}
        if level_kwargs:
            planner_over["levels"] = SafetyLevels(**level_kwargs)
        if norm["costs"]:
            planner_over["costs"] = CostWeights(**norm["costs"])
        planner_over["bounds"] = bounds
        planner_over["noise"] = noise
        planner_over["radius"] = norm["radius"]
        planner_over["planner_dt"] = sim.get("dt", 0.1)
        controller = controller_for(algo, policy=policy,
                                    mppi_overrides=mppi_over or None,
                                    planner_overrides=planner_over)
    else:
        dd_kwargs = {k: planner[k] for k in
                     ("tracking_offset", "goal_jitter_std", "preferred_speed",
                      "tau", "radius_buffer") if k in planner}
        controller = controller_for("orca-dd", planner_overrides=dd_kwargs)

    return SimConfig(
        dt=sim.get("dt", 0.1),
        step_limit=sim.get("step_limit", 1000),
        goal_tolerance=sim.get("goal_tolerance", 0.3),
        noise=noise,
        bounds=bounds,
        controllers=controller,
    )


def _run_task(args):
    scenario, sim_cfg, seed, meta, traj_path = args
    outcome = run(scenario, sim_cfg, seed, traj_path=traj_path)
    record = dict(meta)
    record.update({
        "seed": seed,
        "status": outcome.status,
        "makespan_s": outcome.makespan_s,
        "arrival_steps": outcome.arrival_steps,
        "min_pairwise_dist": outcome.min_pairwise_dist,
        "steps_executed": outcome.steps_executed,
    })
    return record


def build_tasks(norm: dict, traj_path=None):
    """Expand the normalized config into independent, seeded run tasks."""
    tasks = []
    seed_base = norm["seed_base"]
    for scen, algo in norm["cells"]:
        sim_cfg = _build_sim_config(norm, algo)
        algo_code = PRESET_NAMES.index(algo)
        for instance in range(norm["instances"]):
            scen_seed = rngmod.derive_seed(seed_base, 101, scen["n"], instance)
            scenario = _build_scenario(scen, norm["radius"], scen_seed)
            for rep in range(norm["repetitions"]):
                run_seed = rngmod.derive_seed(seed_base, 202, algo_code,
                                              scen["n"], instance, rep)
                meta = {"scenario": scen["kind"], "n": scen["n"], "algo": algo,
                        "instance": instance, "rep": rep}
                traj = traj_path if (instance == 0 and rep == 0) else None
                tasks.append((scenario, sim_cfg, run_seed, meta, traj))
    return tasks


def recompute_aggregates(records: list[dict]) -> list[dict]:
    """Aggregate per-run records by (scenario, n, algo).

    Mean makespan follows the 100%-success rule: only instances whose runs
    all succeeded contribute, and the mean is over the runs of those
    instances. With no qualifying instance the mean is null.
    """
    groups: dict[tuple, list[dict]] = {}
    for rec in records:
        groups.setdefault((rec["scenario"], rec["n"], rec["algo"]), []).append(rec)
    aggregates = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2])):
        recs = groups[key]
        n_runs = len(recs)
        successes = sum(r["status"] == SUCCESS for r in recs)
        collisions = sum(r["status"] == COLLISION for r in recs)
        by_instance: dict[int, list[dict]] = {}
        for rec in recs:
            by_instance.setdefault(rec["instance"], []).append(rec)
        full = [r for inst in by_instance.values()
                if all(x["status"] == SUCCESS for x in inst) for r in inst]
        mean_makespan = (sum(r["makespan_s"] for r in full) / len(full)
                         if full else None)
        aggregates.append({
            "scenario": key[0], "n": key[1], "algo": key[2],
            "runs": n_runs,
            "success_rate": successes / n_runs if n_runs else None,
            "pct_collision_terminated": collisions / n_runs if n_runs else None,
            "mean_makespan_s": mean_makespan,
        })
    return aggregates


def verify_document(doc: dict) -> bool:
    """Recompute the aggregates from the records and compare (ships as the
    document self-check; also run before anything is written)."""
    return recompute_aggregates(doc["records"]) == doc["aggregates"]


def execute(norm: dict, jobs: int = 1, traj_path=None) -> dict:
    tasks = build_tasks(norm, traj_path=traj_path)
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(task) for task in tasks]
    records.sort(key=lambda r: (r["scenario"], r["n"], r["algo"],
                                r["instance"], r["rep"]))
    doc = {"records": records, "aggregates": recompute_aggregates(records)}
    assert verify_document(doc)
    return doc


def document_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode()


def _write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mrnav-out-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config_file(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config PATH is required")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrnav",
        description="Multi-robot collision-avoidance experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("run", "execute the configured runs"),
                      ("sweep", "execute an evaluation sweep"),
                      ("validate", "check a config file and exit")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", help="path to the JSON config file")
        p.add_argument("--algo", help="override the algorithm preset")
        p.add_argument("--seed", type=int, help="override the seed base")
        p.add_argument("--out", help="write the metrics document here")
        p.add_argument("--traj", help="write a trajectory log (first run only)")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel worker processes (default 1)")
    return parser


def main(argv=None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        config = _load_config_file(args.config)
        if args.algo is not None:
            if "sweep" in config:
                config["sweep"]["algos"] = [args.algo]
            else:
                config["algo"] = args.algo
        if args.seed is not None:
            config["seed_base"] = args.seed

        if args.command == "validate":
            problems = validate_config(config)
            if problems:
                for problem in problems:
                    print(f"error: {problem}", file=sys.stderr)
                return EXIT_CONFIG
            print("ok")
            return EXIT_OK

        norm = _normalize(config)
        if args.command == "run" and norm["mode"] != "run":
            raise ConfigError("'run' needs a config with a 'scenario' section")
        if args.command == "sweep" and norm["mode"] != "sweep":
            raise ConfigError("'sweep' needs a config with a 'sweep' section")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        doc = execute(norm, jobs=max(1, args.jobs), traj_path=args.traj)
        doc["config"] = config
        data = document_bytes(doc)
        if args.out:
            _write_atomic(args.out, data)
        else:
            sys.stdout.write(data.decode())
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure: report, never leave partial files
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
