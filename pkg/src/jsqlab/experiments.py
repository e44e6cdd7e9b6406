"""Experiment runners behind the command-line subcommands.

Each runner takes a fully resolved flat config dict and returns an
:class:`Outcome`: a JSON-ready results dict, a pass flag and optional CSV
tables. Nothing here reads the clock, so identical configs give identical
outcomes.
"""

from __future__ import annotations

import math
import os
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diffusion_sim, jsq_ctmc, lyapunov_drift, stein_solutions
from .errors import ConfigError
from .fluid_model import ModelParams, gamma_solve
from .grid import GridSpec


@dataclass
class Table:
    suffix: str
    columns: tuple[str, ...]
    rows: list
    comment: str


@dataclass
class Outcome:
    results: dict
    passed: bool
    tables: list[Table] = field(default_factory=list)


AUTO = "auto"

DEFAULTS: dict[str, dict] = {
    "simulate-ctmc": {
        "n": 400, "beta": 1.0, "kappa": 2.0, "kappa_tilde": 0.5, "horizon": 20050.0,
        "burn_in": 50.0, "trunc_b": 12, "batches": 30, "seed": 0, "overflow_tol": 1e-6,
    },
    "solve-exact": {
        "n": 1, "beta": 0.5, "cap_c": AUTO, "depth": AUTO, "kappa": 1.0, "kappa_tilde": 0.5,
        "state_limit": 200_000, "solver_tol": 1e-15, "identity_tol": 1e-8, "bar_tol": 1e-9,
        "bar_pointwise_max_states": 50_000, "seed": 0,
    },
    "simulate-diffusion": {
        "beta": 1.0, "sde.step": 1e-3, "horizon": 5050.0, "burn_in": 50.0, "sde.thinning": 10,
        "sde.replicas": 1, "seed": 0, "probe.replicas": 1000, "probe.checkpoints": "0,0.5,1,2,4,8",
        "probe.start_a": "0:0", "probe.start_b": "-3:3", "probe.crn": False,
    },
    "verify-pde": {
        "n": 100, "beta": 1.0, "kappa": 2.0, "kappa1": 1.5, "kappa2": 2.5,
        "grid": "-3:0:100,0:3:100", "grid.scale": "fluid", "solutions": "fh,f1,f2",
        "tol": 1e-8, "tol_smoothed": 1e-7, "seed": 0,
    },
    "verify-bounds": {
        "n": 100, "beta": 1.0, "kappa": 2.0, "kappa1": 1.5, "kappa2": 2.5,
        "grid": "-5:0:200,0:5:200", "grid.smoothed": "", "grid.scale": "fluid", "seed": 0,
    },
    "verify-drift": {
        "n": 100, "beta": 1.0, "kappa1": 11.0, "kappa2": 21.0, "alpha": 0.1,
        "grid": "-40:0:100,0:40:100", "grid.scale": "diffusion", "tol": 1e-8, "chain_tol": 1e-9,
        "edge_tol": 1e-8, "scan": False, "scan.alphas": "0.01,0.05,0.1,0.2",
        "scan.kappas": "3:5,6:11,11:21", "scan.grid": "-40:0:20,0:40:20", "seed": 0,
    },
    "verify-expansion": {
        "n": 10, "beta": 1.0, "kappa": 2.0, "states": 1000, "tol": 1e-9, "seed": 0,
    },
    "gamma-table": {
        "n": 100, "beta": 1.0, "kappa": 2.0, "x1_lo": -3.0, "points": 61, "tol": 1e-10, "seed": 0,
    },
    "interchange": {
        "beta": 1.0, "n_list": "100,10000", "replicas": 1000, "per_replica": 100, "spacing": 0.2,
        "burn_in": 20.0, "trunc_b": 12, "sde.step": 1e-3, "sde.burn_in": 20.0, "sde.thinning": 200,
        "seed": 0,
    },
    "accept": {"seed": 0, "only": "all"},
}


def worker_count() -> int:
    raw = os.environ.get("JSQLAB_THREADS", "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ConfigError(f"JSQLAB_THREADS must be a positive integer, got {raw!r}", "CONFIG") from exc
    if count < 1:
        raise ConfigError(f"JSQLAB_THREADS must be a positive integer, got {raw!r}", "CONFIG")
    return count


def _coerce(key: str, value, default):
    if isinstance(default, bool):
        if isinstance(value, str):
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{key}: expected a boolean, got {value!r}", "CONFIG")
        return bool(value)
    if default == AUTO:
        if value is None or value == AUTO:
            return AUTO
        return _coerce(key, value, 0)
    try:
        if isinstance(default, int):
            as_float = float(value)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        if isinstance(default, float):
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
            return out
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot interpret {value!r} as {type(default).__name__}", "CONFIG") from exc
    return str(value)


def resolve_config(command: str, *layers: dict) -> dict:
    """Merge config layers (later wins) over the command defaults, coercing each value."""
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}", "CONFIG")
    defaults = DEFAULTS[command]
    cfg = dict(defaults)
    for layer in layers:
        for key, value in layer.items():
            if value is None:
                continue
            if key not in defaults:
                raise ConfigError(f"key {key!r} does not apply to {command}", "UNKNOWN_KEY")
            cfg[key] = _coerce(key, value, defaults[key])
    return cfg


def _params(cfg: dict) -> ModelParams:
    return ModelParams(cfg["n"], cfg["beta"])


def _float_list(key: str, text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}", "CONFIG") from exc


def _pair(key: str, text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected 'a:b', got {text!r}", "CONFIG") from exc


def _grid(cfg: dict, key: str = "grid", scale_key: str = "grid.scale") -> GridSpec:
    return GridSpec.parse(cfg[key], cfg[scale_key])


# ---------------------------------------------------------------- chain


def run_simulate_ctmc(cfg: dict) -> Outcome:
    params = _params(cfg)
    params.check_kappa(cfg["kappa"])
    est = jsq_ctmc.simulate(params, cfg["horizon"], cfg["burn_in"], cfg["seed"],
                            trunc_b=cfg["trunc_b"], batch_count=cfg["batches"])
    levels = []
    for i in range(est.depth):
        mean, hw = jsq_ctmc._summary(est.batch_mean_queue()[:, i])
        levels.append({"level": i + 1, "mean_queue": mean, "ci_half_width": hw})
    main = jsq_ctmc.thm_main_check(est, params.beta, cfg["kappa"])
    q3 = jsq_ctmc.thm_q3_check(est, params.beta, cfg["kappa"], cfg["kappa_tilde"])
    overflow = est.overflow_rate()
    results = {
        "lambda": params.lam,
        "events": est.events,
        "arrivals": est.arrivals,
        "overflows": est.overflows,
        "overflow_rate": overflow,
        "overflow_ok": overflow <= cfg["overflow_tol"],
        "levels": levels,
        "moment_identities": jsq_ctmc.moment_identities_check(est),
        "waiting_bound": main,
        "deep_queue_bound": q3,
    }
    passed = (results["overflow_ok"] and main["excess_holds"] and main["scaled_mean_holds"]
              and q3["holds"])
    table = Table("levels", ("level", "mean_queue", "ci_half_width"),
                  [(r["level"], r["mean_queue"], r["ci_half_width"]) for r in levels],
                  "level i, time-average E Q_i, 95% batch-means half-width")
    return Outcome(results, passed, [table])


def bar_library(params: ModelParams, cap: int) -> dict[str, Callable]:
    """Ten bounded test functions on the truncated state space."""
    n = params.n
    fh = jsq_ctmc.lift(stein_solutions.FhField(params, params.beta + 0.5).value, n)
    quad = jsq_ctmc.lift(stein_solutions.QuadraticField().value, n)
    half = max(cap // 2, 1)
    return {
        "constant": lambda q: 1.0,
        "capped_total": lambda q: float(min(half, sum(q))),
        "q1": lambda q: float(q[0]),
        "q2": lambda q: float(q[1]),
        "q1_squared": lambda q: float(q[0] * q[0]),
        "q1_times_q2": lambda q: float(q[0] * q[1]),
        "total_squared": lambda q: float(sum(q)) ** 2,
        "lifted_waiting_solution": fh,
        "lifted_quadratic": quad,
        "trig_mix": lambda q: math.sin(q[0]) + math.cos(0.5 * q[1]) + 0.1 * sum(q[2:]),
    }


def run_solve_exact(cfg: dict) -> Outcome:
    params = _params(cfg)
    params.check_kappa(cfg["kappa"])
    cap = 40 * params.n if cfg["cap_c"] == AUTO else cfg["cap_c"]
    depth = None if cfg["depth"] == AUTO else cfg["depth"]
    dist = jsq_ctmc.exact_stationary(params, cap, depth=depth, state_limit=cfg["state_limit"],
                                     tol=cfg["solver_tol"])
    moments = jsq_ctmc.moment_identities_check(dist)
    mean_q = dist.mean_queue()
    results = {
        "lambda": params.lam,
        "cap_c": cap,
        "depth": dist.depth,
        "states": dist.size,
        "sweeps": dist.sweeps,
        "balance_residual": dist.residual,
        "prob_sum_error": abs(float(dist.probs.sum()) - 1.0),
        "min_prob": float(dist.probs.min()),
        "cap_blocking": dist.cap_blocking(),
        "depth_blocking": dist.depth_blocking(),
        "mean_queue": mean_q,
        "full_probs": dist.full_probs(),
        "moment_identities": moments,
    }
    ok = moments["max_abs_discrepancy"] <= cfg["identity_tol"]
    ok = ok and results["prob_sum_error"] <= 1e-12 and results["min_prob"] >= 0.0
    if params.n == 1:
        levels = min(dist.depth, 20)
        geo = float(np.max(np.abs(mean_q[:levels] - params.lam ** np.arange(1, levels + 1))))
        results["geometric_max_error"] = geo
        ok = ok and geo <= cfg["identity_tol"]
    bar = {}
    for name, f in bar_library(params, cap).items():
        entry = {"matrix": jsq_ctmc.bar_residual(dist, f, "matrix")}
        # The state-by-state route is an independent check of the assembled generator
        # but costs ~3 ms per thousand states per function.
        if dist.size <= cfg["bar_pointwise_max_states"]:
            entry["pointwise"] = jsq_ctmc.bar_residual(dist, f, "pointwise")
        entry["passed"] = all(abs(v) <= cfg["bar_tol"] for v in entry.values())
        bar[name] = entry
    results["bar"] = bar
    ok = ok and all(e["passed"] for e in bar.values())
    main = jsq_ctmc.thm_main_check(dist, params.beta, cfg["kappa"])
    results["waiting_bound"] = main
    ok = ok and main["excess_holds"] and main["scaled_mean_holds"]
    # The deep-queue bound needs beta/sqrt(n) < kappa_tilde, which fails for very small n.
    lo = max(params.beta / params.root_n, 1.0 / params.n)
    if lo < cfg["kappa_tilde"] < 1.0:
        q3 = jsq_ctmc.thm_q3_check(dist, params.beta, cfg["kappa"], cfg["kappa_tilde"])
        results["deep_queue_bound"] = q3
        ok = ok and q3["holds"]
    table = Table("levels", ("level", "mean_queue", "full_prob_before"),
                  [(i + 1, mean_q[i], dist.full_probs()[i]) for i in range(dist.depth)],
                  "level i, exact E Q_i, P(Q_1 = ... = Q_{i-1} = n)")
    return Outcome(results, bool(ok), [table])


def _random_states(n: int, count: int, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """States with a fair share on the q1 = n and q1 = q2 = n faces."""
    out = []
    for _ in range(count):
        q1 = n if rng.random() < 0.3 else int(rng.integers(0, n + 1))
        q2 = q1 if rng.random() < 0.2 else int(rng.integers(0, q1 + 1))
        q3 = int(rng.integers(0, q2 + 1)) if rng.random() < 0.7 else 0
        out.append((q1, q2, q3))
    return out


def run_verify_expansion(cfg: dict) -> Outcome:
    params = _params(cfg)
    fields = {
        "waiting_solution": stein_solutions.FhField(params, cfg["kappa"]),
        "quadratic_a": stein_solutions.QuadraticField(),
        "quadratic_b": stein_solutions.QuadraticField((-0.4, 1.3, 0.8, -2.0, 0.6)),
    }
    states = _random_states(params.n, cfg["states"], np.random.default_rng(cfg["seed"]))
    per_field = {}
    for name, fld in fields.items():
        worst, where = 0.0, None
        for q in states:
            lhs, rhs = jsq_ctmc.expansion_gap_check(params, fld, q)
            gap = abs(lhs - rhs)
            if gap > worst or where is None:
                worst, where = gap, list(q)
        per_field[name] = {"max_gap": worst, "worst_state": where, "passed": worst <= cfg["tol"]}
    return Outcome({"fields": per_field, "states": len(states)},
                   all(v["passed"] for v in per_field.values()))


# ---------------------------------------------------------------- fluid solutions


def run_verify_pde(cfg: dict) -> Outcome:
    params = _params(cfg)
    params.check_kappa(cfg["kappa"])
    stein_solutions._check_pair(params, cfg["kappa1"], cfg["kappa2"])
    grid = _grid(cfg)
    which_list = [w.strip() for w in cfg["solutions"].split(",") if w.strip()]
    reports = {}
    ok = True
    for which in which_list:
        if which == "fh":
            rep = stein_solutions.pde_residual_scan(params, "fh", grid, kappa=cfg["kappa"])
            tol = cfg["tol"]
        else:
            rep = stein_solutions.pde_residual_scan(params, which, grid, kappa1=cfg["kappa1"],
                                                    kappa2=cfg["kappa2"])
            tol = cfg["tol_smoothed"]
        passed = rep.passed(tol)
        ok = ok and passed
        reports[which] = {
            "points": rep.points,
            "max_residual": rep.max_residual,
            "worst_point": rep.worst_point,
            "boundary_points": rep.boundary_points,
            "max_boundary_residual": rep.max_boundary_residual,
            "tolerance": tol,
            "passed": passed,
        }
    return Outcome({"grid": str(grid.to_fluid(params.root_n)), "solutions": reports}, ok)


def _bound_dict(rep: stein_solutions.BoundReport) -> dict:
    return {"checks": rep.checks, "violations": rep.violations, "passed": rep.passed}


def run_verify_bounds(cfg: dict) -> Outcome:
    params = _params(cfg)
    grid = _grid(cfg)
    # An empty smoothed-grid entry means "same grid as the waiting solution".
    grid_sm = GridSpec.parse(cfg["grid.smoothed"], cfg["grid.scale"]) if cfg["grid.smoothed"] else grid
    fh = stein_solutions.f_h_bound_report(params, cfg["kappa"], grid)
    sm = stein_solutions.smoothed_bound_report(params, cfg["kappa1"], cfg["kappa2"], grid_sm)
    results = {"grid": str(grid.to_fluid(params.root_n)), "grid_smoothed": str(grid_sm.to_fluid(params.root_n)),
               "waiting_solution": _bound_dict(fh), "smoothed_solutions": _bound_dict(sm)}
    return Outcome(results, fh.passed and sm.passed)


def run_gamma_table(cfg: dict) -> Outcome:
    params = _params(cfg)
    if cfg["points"] < 2 or cfg["x1_lo"] >= 0.0:
        raise ConfigError("gamma-table needs points >= 2 and x1_lo < 0", "PARAM_RANGE")
    rows = []
    worst = 0.0
    for x1 in np.linspace(cfg["x1_lo"], 0.0, cfg["points"]):
        sol = gamma_solve(params, cfg["kappa"], float(x1))
        rows.append((sol.x1, sol.nu_star, sol.eta_star, sol.kappa))
        worst = max(worst, abs(sol.residual_nu), abs(sol.residual_eta))
    monotone = all(a[1] >= b[1] for a, b in zip(rows, rows[1:]))
    results = {"rows": len(rows), "max_residual": worst, "nu_star_nonincreasing_in_x1": monotone,
               "nu_star_at_zero": rows[-1][1], "fluid_level": params.fluid_level(cfg["kappa"])}
    table = Table("gamma", ("x1", "nu_star", "eta_star", "kappa"), rows,
                  "x1, height of the separating curve, hitting time of the axis, kappa")
    # Monotonicity of nu_star is reported but not assumed.
    return Outcome(results, worst <= cfg["tol"], [table])


# ---------------------------------------------------------------- diffusion


def run_verify_drift(cfg: dict) -> Outcome:
    params = _params(cfg)
    grid = _grid(cfg)
    rep = lyapunov_drift.verify_drift(params, cfg["kappa1"], cfg["kappa2"], cfg["alpha"], grid, tol=cfg["tol"])
    y_grid = grid if grid.scale == "diffusion" else GridSpec(
        grid.x1_lo * params.root_n, grid.x1_hi * params.root_n, grid.n1,
        grid.x2_lo * params.root_n, grid.x2_hi * params.root_n, grid.n2, "diffusion")
    corners = {
        "origin": (0.0, 0.0),
        "far_x1": (y_grid.x1_lo, 0.0),
        "far_x2": (0.0, y_grid.x2_hi),
        "far_both": (y_grid.x1_lo, y_grid.x2_hi),
    }
    values = {k: lyapunov_drift.lyapunov_value(params, cfg["kappa1"], cfg["kappa2"], cfg["alpha"], y)
              for k, y in corners.items()}
    results = {
        "c": rep.c,
        "d": rep.d,
        "c_positive": rep.c_positive,
        "points": rep.points,
        "max_excess": rep.max_excess,
        "worst_point": rep.worst_point,
        "max_chain_rule_residual": rep.max_chain_rule_residual,
        "max_edge_residual": rep.max_boundary_residual,
        "lyapunov_values": values,
        "growth_ratio_far_corners": {k: values[k] / values["origin"] for k in values if k != "origin"},
    }
    passed = (rep.passed and rep.max_chain_rule_residual <= cfg["chain_tol"]
              and rep.max_boundary_residual <= cfg["edge_tol"])
    tables = []
    if cfg["scan"]:
        scan_grid = GridSpec.parse(cfg["scan.grid"], cfg["grid.scale"])
        pairs = [_pair("scan.kappas", t) for t in cfg["scan.kappas"].split(",") if t.strip()]
        rows = lyapunov_drift.scan_drift(params, _float_list("scan.alphas", cfg["scan.alphas"]), pairs, scan_grid)
        table_rows = [(r.alpha, r.kappa1, r.kappa2, r.c, r.d, r.passed) for r in rows]
        results["scan"] = [dict(zip(("alpha", "kappa1", "kappa2", "c", "d", "pass"), row)) for row in table_rows]
        tables.append(Table("scan", ("alpha", "kappa1", "kappa2", "c", "d", "pass"), table_rows,
                            "drift scan: alpha, kappa1, kappa2, rate c, offset d, grid inequality holds"))
    return Outcome(results, passed, tables)


def _split_half(samples: np.ndarray, batches: int = 15) -> dict:
    from scipy import stats

    half = len(samples) // 2
    parts = [samples[:half], samples[half:2 * half]]
    means, widths = [], []
    for part in parts:
        usable = (len(part) // batches) * batches
        groups = part[:usable].reshape(batches, -1, 2).mean(axis=1)
        means.append(groups.mean(axis=0))
        widths.append(stats.t.ppf(0.975, batches - 1) * groups.std(axis=0, ddof=1) / math.sqrt(batches))
    diff = np.abs(means[0] - means[1])
    combined = np.hypot(widths[0], widths[1])
    return {"first_half_mean": means[0], "second_half_mean": means[1], "abs_difference": diff,
            "combined_ci": combined, "agree": bool(np.all(diff <= combined))}


def run_simulate_diffusion(cfg: dict) -> Outcome:
    beta = cfg["beta"]
    sde_cfg = diffusion_sim.SdeConfig(step=cfg["sde.step"], horizon=cfg["horizon"], burn_in=cfg["burn_in"],
                                      seed=cfg["seed"], thinning=cfg["sde.thinning"],
                                      replicas=cfg["sde.replicas"])
    samples = diffusion_sim.simulate_stationary(beta, sde_cfg)
    ys = samples.samples
    domain_ok = bool(np.all(ys[:, 0] <= 0.0) and np.all(ys[:, 1] >= 0.0))
    split = _split_half(ys)
    probe = diffusion_sim.ergodic_decay_probe(
        beta, _pair("probe.start_a", cfg["probe.start_a"]), _pair("probe.start_b", cfg["probe.start_b"]),
        _float_list("probe.checkpoints", cfg["probe.checkpoints"]), replicas=cfg["probe.replicas"],
        seed=cfg["seed"] + 1, step=cfg["sde.step"], common_random_numbers=cfg["probe.crn"])
    d = probe.distances
    nz = probe.noise
    decay_ok = all(d[i + 1] <= d[i] + 2.0 * max(nz[i], nz[i + 1]) for i in range(len(d) - 1))
    results = {
        "samples": len(ys),
        "mean": samples.mean(),
        "mean_ci": samples.mean_ci(),
        "domain_ok": domain_ok,
        "split_half": split,
        "decay_probe": {"times": probe.times, "distances": d, "noise": nz,
                        "common_random_numbers": probe.common_random_numbers,
                        "log_slope": probe.log_slope(), "nonincreasing_within_noise": decay_ok},
    }
    table = Table("probe", ("t", "distance", "noise"), probe.rows(),
                  "time, W1 distance between ensembles from the two starts, half-ensemble noise floor")
    return Outcome(results, domain_ok and split["agree"] and decay_ok, [table])


def _seed_for(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([seed, tag]).generate_state(1)[0])


def _ctmc_task(args):
    n, beta, replicas, per_replica, spacing, burn_in, seed, trunc_b = args
    return jsq_ctmc.sample_scaled_states(ModelParams(n, beta), replicas, per_replica, spacing, burn_in,
                                         seed, trunc_b=trunc_b)


def _sde_task(args):
    beta, sde_cfg = args
    return diffusion_sim.simulate_stationary(beta, sde_cfg).samples


def run_interchange(cfg: dict) -> Outcome:
    beta = cfg["beta"]
    ns = [int(v) for v in _float_list("n_list", cfg["n_list"])]
    if len(ns) < 2:
        raise ConfigError("n_list needs at least two sizes", "PARAM_RANGE")
    budget = cfg["replicas"] * cfg["per_replica"]
    if budget < 10_000:
        raise ConfigError(f"sample budget {budget} is below 10^4", "SAMPLE_SIZE")
    for n in ns:
        ModelParams(n, beta)
    sde_horizon = cfg["sde.burn_in"] + cfg["per_replica"] * cfg["sde.thinning"] * cfg["sde.step"]
    sde_cfg = diffusion_sim.SdeConfig(step=cfg["sde.step"], horizon=sde_horizon, burn_in=cfg["sde.burn_in"],
                                      seed=_seed_for(cfg["seed"], 0), thinning=cfg["sde.thinning"],
                                      replicas=cfg["replicas"])
    ctmc_jobs = [(n, beta, cfg["replicas"], cfg["per_replica"], cfg["spacing"], cfg["burn_in"],
                  _seed_for(cfg["seed"], i + 1), cfg["trunc_b"]) for i, n in enumerate(ns)]
    workers = min(worker_count(), len(ns) + 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            sde_future = pool.submit(_sde_task, (beta, sde_cfg))
            ctmc = list(pool.map(_ctmc_task, ctmc_jobs))
            sde = sde_future.result()
    else:
        sde = _sde_task((beta, sde_cfg))
        ctmc = [_ctmc_task(job) for job in ctmc_jobs]
    rows = []
    for n, sample in zip(ns, ctmc):
        dist = diffusion_sim.interchange_distance(sample, sde)
        rows.append({"n": n, "samples": len(sample), **dist, "scaled_mean": sample.mean(axis=0)})
    decreasing = all(
        b[key] < a[key] for a, b in zip(rows, rows[1:]) for key in ("w1_y1", "w1_y2", "w1_sum")
    )
    results = {"sde_samples": len(sde), "sde_mean": sde.mean(axis=0), "by_n": rows,
               "strictly_decreasing": decreasing}
    table = Table("distance", ("n", "w1_y1", "w1_y2", "w1_sum"),
                  [(r["n"], r["w1_y1"], r["w1_y2"], r["w1_sum"]) for r in rows],
                  "n, W1 distance per coordinate between scaled chain and diffusion samples, and their sum")
    return Outcome(results, decreasing, [table])


RUNNERS: dict[str, Callable[[dict], Outcome]] = {
    "simulate-ctmc": run_simulate_ctmc,
    "solve-exact": run_solve_exact,
    "simulate-diffusion": run_simulate_diffusion,
    "verify-pde": run_verify_pde,
    "verify-bounds": run_verify_bounds,
    "verify-drift": run_verify_drift,
    "verify-expansion": run_verify_expansion,
    "gamma-table": run_gamma_table,
    "interchange": run_interchange,
}


def run(command: str, cfg: dict) -> Outcome:
    if command == "accept":
        from .acceptance import run_suite

        return run_suite(cfg)
    return RUNNERS[command](cfg)
