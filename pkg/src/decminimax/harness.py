"""Configuration loading, experiment orchestration, and persistence.

A run is described by one YAML file (strict schema: unknown keys are
rejected). Each (config, seed) pair runs one engine; seeds may execute
in parallel but aggregation is in ascending seed order, so outputs are
byte-identical across thread counts.
"""

import csv
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .engine import EngineConfig, MetricsSeries, run_and_measure
from .errors import ConfigError, DivergenceError
from .estimator import EstimatorMode, GraceParams
from .mixing import MixingMatrix, Topology, mixing_for_topology
from .problems import make_quadratic_problem, make_sinpl_problem
from .schedules import ScheduleMode, ScheduleSpec, schedule_for_mode, \
    shrink_to_valid, validate_conditions
from .strategies import SQRT_STRATEGIES, StrategyKind, build_strategy, \
    verify_strategy_assumptions
from .transform import build_transform_bundle

CSV_HEADER = [
    "round", "grad_x_sq", "grad_y_sq", "consensus_sq", "delta_c",
    "est_err_sq", "est_err_avg_sq", "ehat_x_sq", "ehat_y_sq", "samples_used",
]

# schema: section -> {key: default}; _REQUIRED marks keys without defaults
_REQUIRED = object()
_SCHEMA = {
    "topology": {"kind": "ring", "K": _REQUIRED, "edge_prob": None,
                 "seed": None, "lazy": None},
    "strategy": _REQUIRED,
    "problem": {"kind": "quadratic", "d1": 2, "d2": 2, "N": None,
                "sigma": 0.0, "seed": 0, "nu_target": 0.5, "hetero": 1.0,
                "r_scale": 0.3, "q_spread": 1.0, "s_spread": 0.5,
                "zero_mean_linear": False},
    "schedule": {"mode": "explicit", "mu_x": None, "mu_y": None,
                 "beta": 0.0, "p": 0.0, "b": 1, "B_big": None, "b0": 1,
                 "c_mu": 1.0, "c_beta": 1.0, "c_p": 1.0, "c_b": 1.0,
                 "shrink_to_valid": False},
    "T": _REQUIRED,
    "seeds": [0],
    "x0": None,
    "y0": None,
    "diagnostics": {"transform": False},
}


def _merge_section(name, schema, given):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    unknown = set(given) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {sorted(unknown)}")
    out = {}
    for key, default in schema.items():
        if key in given:
            out[key] = given[key]
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {name!r}.{key!r}")
        else:
            out[key] = default
    return out


@dataclass(frozen=True)
class RunConfig:
    topology: dict
    strategy: StrategyKind
    problem: dict
    schedule: dict
    T: int
    seeds: tuple
    x0: tuple | None
    y0: tuple | None
    diagnostics: dict

    def resolved(self) -> dict:
        return {
            "topology": dict(self.topology),
            "strategy": self.strategy.value,
            "problem": dict(self.problem),
            "schedule": dict(self.schedule),
            "T": self.T,
            "seeds": list(self.seeds),
            "x0": None if self.x0 is None else list(self.x0),
            "y0": None if self.y0 is None else list(self.y0),
            "diagnostics": dict(self.diagnostics),
        }


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    topo = _merge_section("topology", _SCHEMA["topology"], raw.get("topology"))
    prob = _merge_section("problem", _SCHEMA["problem"], raw.get("problem"))
    sched = _merge_section("schedule", _SCHEMA["schedule"], raw.get("schedule"))
    diag = _merge_section("diagnostics", _SCHEMA["diagnostics"],
                          raw.get("diagnostics"))
    if "strategy" not in raw:
        raise ConfigError("missing required key 'strategy'")
    try:
        strategy = StrategyKind(str(raw["strategy"]).lower())
    except ValueError:
        raise ConfigError(
            f"unknown strategy {raw['strategy']!r}; valid: "
            f"{[s.value for s in StrategyKind]}"
        ) from None
    if "T" not in raw:
        raise ConfigError("missing required key 'T'")
    T = int(raw["T"])
    seeds = raw.get("seeds", _SCHEMA["seeds"])
    if not isinstance(seeds, (list, tuple)) or not seeds:
        raise ConfigError("'seeds' must be a non-empty list")
    if prob["kind"] not in ("quadratic", "sinpl"):
        raise ConfigError(f"unknown problem kind {prob['kind']!r}")
    if topo["lazy"] is None:
        topo["lazy"] = strategy in SQRT_STRATEGIES
    x0 = raw.get("x0")
    y0 = raw.get("y0")
    return RunConfig(
        topology=topo,
        strategy=strategy,
        problem=prob,
        schedule=sched,
        T=T,
        seeds=tuple(int(s) for s in seeds),
        x0=None if x0 is None else tuple(float(v) for v in x0),
        y0=None if y0 is None else tuple(float(v) for v in y0),
        diagnostics=diag,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(raw)


def build_problem(config: RunConfig):
    p = config.problem
    if p["kind"] == "sinpl":
        if p["N"] is not None:
            raise ConfigError("sinpl problem is online-only; leave N unset")
        return make_sinpl_problem(config.topology["K"], p["sigma"], p["seed"])
    return make_quadratic_problem(
        K=config.topology["K"], d1=p["d1"], d2=p["d2"],
        N=p["N"], sigma=p["sigma"], seed=p["seed"],
        nu_target=p["nu_target"], q_spread=p["q_spread"],
        s_spread=p["s_spread"], r_scale=p["r_scale"], hetero=p["hetero"],
        zero_mean_linear=p["zero_mean_linear"],
    )


def build_mixing(config: RunConfig) -> MixingMatrix:
    t = config.topology
    topo = Topology(kind=t["kind"], K=int(t["K"]), edge_prob=t["edge_prob"],
                    seed=t["seed"])
    return mixing_for_topology(topo, lazy=bool(t["lazy"]))


def _resolve_schedule(config: RunConfig, problem, mixing, bundle):
    """Return (mu_x, mu_y, GraceParams, info dict)."""
    s = config.schedule
    info = {"mode": s["mode"], "shrink_halvings": 0}
    if s["mode"] == "explicit":
        if s["mu_x"] is None or s["mu_y"] is None:
            raise ConfigError("explicit schedule needs mu_x and mu_y")
        grace = GraceParams(
            beta=float(s["beta"]), p=float(s["p"]), b=int(s["b"]),
            B_big=None if s["B_big"] is None else int(s["B_big"]),
            b0=int(s["b0"]),
        )
        mu_x, mu_y = float(s["mu_x"]), float(s["mu_y"])
    else:
        try:
            mode = ScheduleMode(s["mode"])
        except ValueError:
            raise ConfigError(
                f"unknown schedule mode {s['mode']!r}; valid: explicit, "
                f"{[m.value for m in ScheduleMode]}"
            ) from None
        spec = ScheduleSpec(
            mode=mode, T=config.T, K=problem.K,
            kappa=problem.constants.kappa, N=problem.N, lam=mixing.lam,
            c_mu=s["c_mu"], c_beta=s["c_beta"], c_p=s["c_p"], c_b=s["c_b"],
        )
        mu_x, mu_y, grace = schedule_for_mode(spec)
    if s["shrink_to_valid"]:
        mu_x, mu_y, halvings, report = shrink_to_valid(
            mu_x, mu_y, grace, problem.constants, bundle)
        info["shrink_halvings"] = halvings
    else:
        report = validate_conditions(mu_x, mu_y, grace, problem.constants,
                                     bundle)
    info["conditions"] = report.as_dict()
    return mu_x, mu_y, grace, info


@dataclass
class RunResult:
    config: RunConfig
    mixing: MixingMatrix
    problem: object
    mu_x: float
    mu_y: float
    grace: GraceParams
    schedule_info: dict
    series: dict = field(default_factory=dict)   # seed -> MetricsSeries
    failures: dict = field(default_factory=dict)  # seed -> error message
    summary: dict = field(default_factory=dict)


def run_experiment(config: RunConfig, max_workers: int | None = None) -> RunResult:
    problem = build_problem(config)
    mixing = build_mixing(config)
    ops = build_strategy(config.strategy, mixing)
    bundle = build_transform_bundle(ops, mixing, d=problem.d1)
    mu_x, mu_y, grace, sched_info = _resolve_schedule(
        config, problem, mixing, bundle)
    is_online = problem.N is None

    def one_seed(seed):
        engine_config = EngineConfig(
            strategy=config.strategy, mu_x=mu_x, mu_y=mu_y, grace=grace,
            T=config.T, seed=seed, is_online=is_online,
            record_transform_diagnostics=bool(
                config.diagnostics["transform"]),
        )
        return run_and_measure(engine_config, problem, mixing,
                               x0=config.x0, y0=config.y0, ops=ops)

    result = RunResult(config=config, mixing=mixing, problem=problem,
                       mu_x=mu_x, mu_y=mu_y, grace=grace,
                       schedule_info=sched_info)
    seeds = config.seeds
    if max_workers is not None and max_workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {s: pool.submit(one_seed, s) for s in seeds}
        outcomes = {}
        for s in seeds:
            try:
                outcomes[s] = ("ok", futures[s].result())
            except (DivergenceError, FloatingPointError) as exc:
                outcomes[s] = ("err", str(exc))
    else:
        outcomes = {}
        for s in seeds:
            try:
                outcomes[s] = ("ok", one_seed(s))
            except (DivergenceError, FloatingPointError) as exc:
                outcomes[s] = ("err", str(exc))
    for s in sorted(seeds):
        status, payload = outcomes[s]
        if status == "ok":
            result.series[s] = payload
        else:
            result.failures[s] = payload
    result.summary = _summarize(result, bundle)
    return result


def _summarize(result: RunResult, bundle) -> dict:
    c = result.problem.constants
    avg = [result.series[s].avg_stationarity for s in sorted(result.series)]
    final = [
        result.series[s].rows[-1].grad_x_sq + result.series[s].rows[-1].grad_y_sq
        for s in sorted(result.series)
    ]
    samples = [result.series[s].rows[-1].samples_used
               for s in sorted(result.series)]

    def mean_std(vals):
        if not vals:
            return {"mean": None, "std": None}
        return {
            "mean": float(statistics.fmean(vals)),
            "std": float(statistics.pstdev(vals)) if len(vals) > 1 else 0.0,
        }

    return {
        "constants": {
            "nu": c.nu, "L_f": c.L_f, "kappa": c.kappa, "L": c.L,
            "lam": result.mixing.lam,
            "lam_min_nonzero": result.mixing.lam_min_nonzero,
            "rho": bundle.rho,
            "lam_a": math.sqrt(bundle.lam_a_sq),
            "lam_b_underline": math.sqrt(bundle.lam_b_underline_sq),
            "v1_sq": bundle.v1_sq, "v2_sq": bundle.v2_sq,
        },
        "mu_x": result.mu_x,
        "mu_y": result.mu_y,
        "grace": {
            "beta": result.grace.beta, "p": result.grace.p,
            "b": result.grace.b, "B_big": result.grace.B_big,
            "b0": result.grace.b0, "beta_bar": result.grace.beta_bar,
        },
        "schedule": result.schedule_info,
        "avg_stationarity": mean_std(avg),
        "final_stationarity": mean_std(final),
        "samples_per_agent": mean_std([float(v) for v in samples]),
        "seeds_ok": sorted(result.series),
        "seeds_failed": {str(s): msg for s, msg in sorted(result.failures.items())},
    }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_outputs(result: RunResult, out_dir) -> list:
    """Write seed_<s>.csv per seed, summary.json, config.resolved.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for seed in sorted(result.series):
        path = out / f"seed_{seed}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for row in result.series[seed].rows:
                writer.writerow([
                    row.round, _fmt(row.grad_x_sq), _fmt(row.grad_y_sq),
                    _fmt(row.consensus_sq), _fmt(row.delta_c),
                    _fmt(row.est_err_sq), _fmt(row.est_err_avg_sq),
                    _fmt(row.ehat_x_sq), _fmt(row.ehat_y_sq),
                    row.samples_used,
                ])
        written.append(path)
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(result.summary, indent=2,
                                       sort_keys=True) + "\n")
    written.append(summary_path)
    config_path = out / "config.resolved.json"
    config_path.write_text(json.dumps(result.config.resolved(), indent=2,
                                      sort_keys=True) + "\n")
    written.append(config_path)
    return written


def _set_nested(raw: dict, dotted: str, value):
    keys = dotted.split(".")
    node = raw
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _parse_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def sweep(config_path, dotted_key: str, values, out_root) -> list:
    """Rerun one config with dotted_key set to each value in turn."""
    raw = yaml.safe_load(Path(config_path).read_text())
    results = []
    for i, value in enumerate(values):
        variant = json.loads(json.dumps(raw))  # deep copy of plain data
        _set_nested(variant, dotted_key, value)
        config = config_from_dict(variant)
        result = run_experiment(config)
        tag = str(value).replace("/", "_")
        write_outputs(result, Path(out_root) / f"{dotted_key}={tag}")
        results.append(result)
    return results


# -- invariant suite -------------------------------------------------------


def verify_invariants(verbose: bool = False) -> list:
    """Quick cross-module invariant checks; returns [(name, ok, detail)]."""
    from .engine import init_engine  # local import to avoid cycles at load

    checks = []

    def check(name, ok, detail=""):
        checks.append((name, bool(ok), detail))
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}" +
                  (f" ({detail})" if detail else ""))

    # mixing invariants on a few topologies
    for kind, K in (("ring", 8), ("star", 6), ("complete", 5)):
        mix = mixing_for_topology(Topology(kind=kind, K=K), lazy=True)
        sym = float(np.max(np.abs(mix.W - mix.W.T)))
        rows = float(np.max(np.abs(mix.W.sum(axis=1) - 1.0)))
        top = float(np.max(np.abs(mix.W @ np.ones(K) - np.ones(K))))
        check(f"mixing {kind} K={K} symmetric/stochastic",
              sym <= 1e-12 and rows <= 1e-12 and top <= 1e-12,
              f"sym={sym:.1e} rows={rows:.1e}")
    # strategy residuals
    mix = mixing_for_topology(Topology(kind="ring", K=8), lazy=True)
    for kind in StrategyKind:
        ops = build_strategy(kind, mix)
        report = verify_strategy_assumptions(ops, mix)
        check(f"strategy {kind.value} null-space residuals", report.passed)
        bundle = build_transform_bundle(ops, mix)
        P = bundle.block_P()
        res = float(np.linalg.norm(
            P - bundle.Q @ bundle.T_mat @ bundle.Q_inv))
        check(f"transform {kind.value} similarity residual",
              res <= 1e-8 and bundle.rho < 1.0,
              f"res={res:.1e} rho={bundle.rho:.3f}")
    # engine centroid identity over a short run
    problem = make_quadratic_problem(K=8, d1=3, d2=2, N=64, sigma=0.5, seed=3)
    grace = GraceParams(beta=0.2, p=0.1, b=4, b0=4)
    for kind in StrategyKind:
        ops = build_strategy(kind, mix)
        config = EngineConfig(strategy=kind, mu_x=1e-3, mu_y=1e-3,
                              grace=grace, T=50, seed=1)
        state = init_engine(config, problem)
        worst = 0.0
        from .estimator import update_estimator
        from .engine import _advance
        for _ in range(50):
            update_estimator(state.grace, grace, state.X, state.Y, problem,
                             is_online=False)
            xc = state.X.mean(axis=0)
            yc = state.Y.mean(axis=0)
            gx = state.grace.M_x.mean(axis=0)
            gy = state.grace.M_y.mean(axis=0)
            _advance(state, config, ops)
            worst = max(
                worst,
                float(np.max(np.abs(state.X.mean(axis=0) - (xc - 1e-3 * gx)))),
                float(np.max(np.abs(state.Y.mean(axis=0) - (yc + 1e-3 * gy)))),
            )
        check(f"engine {kind.value} centroid identity", worst <= 1e-10,
              f"residual={worst:.1e}")
    return checks
