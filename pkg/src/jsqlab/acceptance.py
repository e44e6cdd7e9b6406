"""The twelve acceptance criteria, shared by the test suite and ``jsqlab accept``.

Every criterion returns a :class:`CriterionResult`. Wall-clock time is kept
on the result but left out of the JSON payload so that reports stay
byte-stable; it still decides ``passed`` when a runtime budget applies.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from . import experiments, jsq_ctmc
from .fluid_model import (
    ModelParams,
    positive_part_cost,
    smoothed_neg_x1_cost,
    smoothed_x2_cost,
    value_integral,
)
from .report import build_report, dumps
from .special_fn import INV_E, lambert_w0, lambert_wm1
from .stein_solutions import f1_jet, f2_jet, f_h_jet


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict
    seconds: float = 0.0
    budget: float | None = None
    summary: str = ""

    @property
    def within_budget(self) -> bool:
        return self.budget is None or self.seconds < self.budget

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        clock = f"{self.seconds:.1f}s" + (f" (budget {self.budget:g}s)" if self.budget else "")
        return f"{verdict} criterion {self.number:>2}: {self.title} | {self.summary} | {clock}"

    def payload(self) -> dict:
        return {"title": self.title, "passed": self.passed, "within_budget": self.within_budget,
                "summary": self.summary, "details": self.details}


@dataclass
class SuiteContext:
    """Runs shared between criteria (e.g. the exact solves reused by the BAR check)."""

    seed: int = 0
    cache: dict = field(default_factory=dict)

    def once(self, key, make: Callable):
        if key not in self.cache:
            self.cache[key] = make()
        return self.cache[key]


def _timed(number: int, title: str, budget: float | None, body: Callable[[], tuple[bool, dict, str]]):
    start = time.perf_counter()
    ok, details, summary = body()
    elapsed = time.perf_counter() - start
    res = CriterionResult(number, title, bool(ok), details, elapsed, budget, summary)
    res.passed = res.passed and res.within_budget
    return res


def _run(command: str, ctx: SuiteContext, **overrides) -> experiments.Outcome:
    cfg = experiments.resolve_config(command, overrides)
    key = (command, tuple(sorted(cfg.items())))
    return ctx.once(key, lambda: experiments.run(command, cfg))


# ---------------------------------------------------------------- 1


def criterion_1(ctx: SuiteContext) -> CriterionResult:
    def body():
        near = -INV_E + np.geomspace(1e-12, INV_E + 1.0, 5000)
        far = np.geomspace(1.0, 1e8, 5000)
        xs0 = np.concatenate([near[near <= 1.0], far])[:10_000]
        neg = np.concatenate([-INV_E + np.geomspace(1e-12, 0.3, 5000), -np.geomspace(1e-300, 0.06, 5000)])
        err0 = max(abs(w * math.exp(w) - x) / abs(x) for x in xs0 if x != 0.0 for w in (lambert_w0(float(x)),))
        errm = max(abs(w * math.exp(w) - x) / abs(x) for x in neg for w in (lambert_wm1(float(x)),))
        ok = err0 <= 1e-12 and errm <= 1e-11
        return ok, {"points_w0": len(xs0), "points_wm1": len(neg), "max_rel_err_w0": err0,
                    "max_rel_err_wm1": errm}, f"W0 {err0:.2e} <= 1e-12, W-1 {errm:.2e} <= 1e-11"

    return _timed(1, "Lambert W round trip", 1.0, body)


# ---------------------------------------------------------------- 2, 3

EXACT_NS = (1, 2, 3, 4, 5)


def _exact(ctx: SuiteContext, n: int) -> jsq_ctmc.ExactDistribution:
    return ctx.once(("exact", n), lambda: jsq_ctmc.exact_stationary(ModelParams(n, 0.5), 40 * n))


def criterion_2(ctx: SuiteContext) -> CriterionResult:
    def body():
        rows = {}
        worst = 0.0
        for n in EXACT_NS:
            dist = _exact(ctx, n)
            params = dist.params
            mq = dist.mean_queue()
            fp = dist.full_probs()
            gaps = [abs(mq[0] - n * params.lam)] + [abs(mq[i] - n * params.lam * fp[i]) for i in (1, 2)]
            row = {"states": dist.size, "depth": dist.depth, "identity_gaps": gaps,
                   "cap_blocking": dist.cap_blocking(), "depth_blocking": dist.depth_blocking()}
            if n == 1:
                k = min(dist.depth, 20)
                row["geometric_gap"] = float(np.max(np.abs(mq[:k] - params.lam ** np.arange(1, k + 1))))
                gaps = gaps + [row["geometric_gap"]]
            worst = max(worst, max(gaps))
            rows[str(n)] = row
        return worst <= 1e-8, {"by_n": rows, "max_gap": worst}, f"max identity gap {worst:.2e} <= 1e-8"

    return _timed(2, "exact-solve moment identities, n = 1..5", 30.0, body)


def criterion_3(ctx: SuiteContext) -> CriterionResult:
    def body():
        rows = {}
        worst = 0.0
        for n in EXACT_NS:
            dist = _exact(ctx, n)
            lib = experiments.bar_library(dist.params, dist.cap)
            vals = {}
            for name, f in lib.items():
                vals[name] = {"matrix": jsq_ctmc.bar_residual(dist, f, "matrix")}
                if dist.size <= 50_000:
                    vals[name]["pointwise"] = jsq_ctmc.bar_residual(dist, f, "pointwise")
                worst = max(worst, *(abs(v) for v in vals[name].values()))
            rows[str(n)] = vals
        return worst <= 1e-9, {"by_n": rows, "max_abs": worst}, f"max |E G f| {worst:.2e} <= 1e-9"

    return _timed(3, "stationarity of ten test functions on every exact solve", None, body)


# ---------------------------------------------------------------- 4, 5, 6


def criterion_4(ctx: SuiteContext) -> CriterionResult:
    def body():
        out = _run("verify-pde", ctx)
        sol = out.results["solutions"]
        summary = ", ".join(f"{k} {v['max_residual']:.1e}/{v['max_boundary_residual']:.1e}" for k, v in sol.items())
        return out.passed, out.results, f"residual/edge {summary}"

    return _timed(4, "fluid PDE residuals on the 100x100 grid", 120.0, body)


def criterion_5(ctx: SuiteContext) -> CriterionResult:
    def body():
        params = ModelParams(100, 1.0)
        rng = np.random.default_rng(ctx.seed + 5)
        costs = {
            "waiting": (positive_part_cost(params, 2.0), lambda x: f_h_jet(params, 2.0, x).f),
            "smoothed_x2": (smoothed_x2_cost(params, 1.5, 2.5), lambda x: f2_jet(params, 1.5, 2.5, x)[0].f),
            "smoothed_neg_x1": (smoothed_neg_x1_cost(params, 1.5, 2.5), lambda x: f1_jet(params, 1.5, 2.5, x).f),
        }
        points = [(-float(rng.uniform(0.0, 3.0)), float(rng.uniform(0.0, 3.0))) for _ in range(100)]
        gaps = {}
        for name, (cost, closed) in costs.items():
            gaps[name] = max(abs(value_integral(params, cost, x) - closed(x)) for x in points)
        gamma = _run("gamma-table", ctx)
        worst = max(gaps.values())
        ok = worst <= 1e-7 and gamma.passed
        return ok, {"max_abs_gap": gaps, "points": len(points), "gamma_table": gamma.results}, \
            f"max |closed form - path integral| {worst:.2e} <= 1e-7"

    return _timed(5, "closed forms against path integrals of the cost", 60.0, body)


def criterion_6(ctx: SuiteContext) -> CriterionResult:
    def body():
        runs = {
            "wide": _run("verify-bounds", ctx),
            "criterion4_box": _run("verify-bounds", ctx, grid="-3:0:200,0:3:200"),
        }
        counts = {k: o.results["waiting_solution"]["violations"] + o.results["smoothed_solutions"]["violations"]
                  for k, o in runs.items()}
        ok = all(o.passed for o in runs.values())
        return ok, {k: o.results for k, o in runs.items()}, \
            f"violations {counts['wide']} on [-5,0]x[0,5], {counts['criterion4_box']} on [-3,0]x[0,3] (200x200)"

    return _timed(6, "derivative bound certification", None, body)


# ---------------------------------------------------------------- 7


def criterion_7(ctx: SuiteContext) -> CriterionResult:
    def body():
        runs = {str(n): _run("verify-expansion", ctx, n=n, seed=ctx.seed + n) for n in (10, 100)}
        worst = max(f["max_gap"] for o in runs.values() for f in o.results["fields"].values())
        ok = all(o.passed for o in runs.values())
        return ok, {k: o.results for k, o in runs.items()}, f"max |lhs - rhs| {worst:.2e} <= 1e-9"

    return _timed(7, "generator expansion identity at 1000 states", 120.0, body)


# ---------------------------------------------------------------- 8, 9

SIM_HORIZON = 2e4
SIM_BURN_IN = 50.0


def _sim(ctx: SuiteContext, n: int) -> experiments.Outcome:
    return _run("simulate-ctmc", ctx, n=n, beta=1.0, kappa=2.0, horizon=SIM_BURN_IN + SIM_HORIZON,
                burn_in=SIM_BURN_IN, seed=ctx.seed)


def criterion_8(ctx: SuiteContext) -> CriterionResult:
    def body():
        sim = _sim(ctx, 400).results["waiting_bound"]
        exact = _run("solve-exact", ctx, n=4, beta=0.5, kappa=1.0, bar_pointwise_max_states=0)
        ex = exact.results["waiting_bound"]
        ok = (sim["scaled_mean_holds"] and sim["excess_holds"]
              and ex["scaled_mean_holds"] and ex["excess_holds"])
        details = {"simulated_n400": sim, "exact_n4": ex}
        summary = (f"sim E sqrt(n)X2 = {sim['scaled_mean']:.3f} +- {sim['scaled_mean_ci']:.3f} <= "
                   f"{sim['scaled_mean_bound']:g}; excess {sim['excess']:.2e} <= {sim['excess_bound']:.2e}; "
                   f"exact n=4 mean {ex['scaled_mean']:.3f} <= {ex['scaled_mean_bound']:g}")
        return ok, details, summary

    return _timed(8, "waiting-fraction bounds (simulated n=400, exact n=4)", 300.0, body)


def criterion_9(ctx: SuiteContext) -> CriterionResult:
    def body():
        rows = {}
        ok = True
        for n in (100, 400):
            q3 = _sim(ctx, n).results["deep_queue_bound"]
            rows[str(n)] = q3
            ok = ok and q3["holds"] and q3["q3_below_five"]
        summary = "; ".join(f"n={k}: E Q3 = {v['q3_mean']:.3g} <= min(5, {v['bound']:.3g})" for k, v in rows.items())
        return ok, rows, summary

    return _timed(9, "third-level queue bound", None, body)


# ---------------------------------------------------------------- 10


def criterion_10(ctx: SuiteContext) -> CriterionResult:
    def body():
        out = _run("verify-drift", ctx)
        r = out.results
        consts_ok = abs(r["c"] - 0.2137) < 5e-5 and abs(r["d"] - 3.108) < 5e-4
        ok = out.passed and consts_ok and r["c_positive"]
        summary = (f"c = {r['c']:.4f}, d = {r['d']:.4f}, max excess {r['max_excess']:.3f} <= 1e-8, "
                   f"chain residual {r['max_chain_rule_residual']:.1e} <= 1e-9")
        return ok, r, summary

    return _timed(10, "Lyapunov drift inequality on the diffusion grid", 120.0, body)


# ---------------------------------------------------------------- 11, 12


def criterion_11(ctx: SuiteContext) -> CriterionResult:
    def body():
        out = _run("interchange", ctx, seed=ctx.seed)
        diffusion = _run("simulate-diffusion", ctx, seed=ctx.seed)
        rows = out.results["by_n"]
        summary = " > ".join(f"W1(n={r['n']}) = {r['w1_y1']:.3f}+{r['w1_y2']:.3f}" for r in rows)
        details = {"interchange": out.results, "diffusion_self_check": diffusion.results}
        return out.passed and diffusion.passed, details, summary

    return _timed(11, "scaled chain approaches the diffusion (1e5 samples each)", 600.0, body)


def criterion_12(ctx: SuiteContext) -> CriterionResult:
    def body():
        jobs = {
            "simulate-ctmc": {"n": 400, "beta": 1.0, "kappa": 2.0, "horizon": SIM_BURN_IN + SIM_HORIZON,
                              "burn_in": SIM_BURN_IN, "seed": ctx.seed},
            "interchange": {"seed": ctx.seed},
        }
        same = {}
        for command, overrides in jobs.items():
            texts = []
            for _ in range(2):
                cfg = experiments.resolve_config(command, overrides)
                out = experiments.run(command, cfg)
                texts.append(dumps(build_report(command, cfg, out.results, out.passed)).encode())
            same[command] = texts[0] == texts[1]
        return all(same.values()), {"byte_identical": same}, \
            ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in same.items())

    return _timed(12, "seeded reruns give byte-identical reports", None, body)


CRITERIA: dict[int, Callable[[SuiteContext], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}


def select(only: str) -> list[int]:
    if only == "all":
        return sorted(CRITERIA)
    try:
        picked = sorted({int(v) for v in only.split(",") if v.strip()})
    except ValueError:
        picked = []
    if not picked or any(v not in CRITERIA for v in picked):
        from .errors import ConfigError

        raise ConfigError(f"only: expected 'all' or criterion numbers 1-12, got {only!r}", "CONFIG")
    return picked


def run_suite(cfg: dict, echo: Callable[[str], None] | None = None) -> experiments.Outcome:
    ctx = SuiteContext(seed=cfg["seed"])
    results = {}
    passed = True
    for number in select(cfg["only"]):
        res = CRITERIA[number](ctx)
        if echo is not None:
            echo(res.line())
        results[str(number)] = res.payload()
        passed = passed and res.passed
    return experiments.Outcome({"criteria": results}, passed)
