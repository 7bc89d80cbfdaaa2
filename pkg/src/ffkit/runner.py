"""Scenario loading, task dispatch and report emission."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import testfuncs
from .bandlimited import (
    BandlimitedFunction,
    BandlimitedSystem,
    dimension_function,
    integral_identity_check,
    length,
    parse_function,
)
from .filterbank import (
    DilationMatrix,
    RefinableCascade,
    TrigPolyMatrix,
    check_biorthogonal_fb,
    check_dual_fb,
    check_generalized_dual,
    check_generalized_tight,
    check_limit_condition,
    check_orthogonal_fb,
    check_tight_fb,
    fejer_riesz_matrix,
    fejer_riesz_scalar,
)
from .lift import (
    compact_support_reduce_1d,
    lift_homogeneous,
    reduce_wavelet_generators,
    trial_span,
)
from .torus import PeriodicStepFunction, format_rpi, is_exact
from .verify import (
    AffineSystem,
    SpectralFunction,
    check_dual,
    check_homogeneous_tight,
    check_orthonormal_biorthogonal,
    check_tight,
    estimate_bounds,
)

VERDICTS = ("PASS", "FAIL", "ERROR")
DEFAULT_SCALES = (-1, 0, 1, 2)
FILTER_SPAN = (Fraction(-2), Fraction(2))


class ScenarioError(ValueError):
    """Invalid scenario file; the message names the offending field."""


# ------------------------------------------------------------------ results


@dataclass
class TaskResult:
    id: str
    task: str
    verdict: str
    residual: float
    residuals: dict = field(default_factory=dict)
    details: list = field(default_factory=list)
    step_functions: dict = field(default_factory=dict)
    timing: float | None = None

    def to_json(self, timing: bool = False) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "verdict": self.verdict,
            "residual": _num_out(self.residual),
            "residuals": {k: _num_out(v) for k, v in self.residuals.items()},
            "details": list(self.details),
            "step_functions": self.step_functions,
            "timing": self.timing if timing else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> TaskResult:
        return cls(obj["id"], obj["task"], obj["verdict"], _num_in(obj["residual"]),
                   {k: _num_in(v) for k, v in obj["residuals"].items()}, list(obj["details"]),
                   obj["step_functions"], obj.get("timing"))


def _num_out(x: float):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _num_in(x):
    return float(x)


def _amp_json(v):
    if is_exact(v):
        return [format_rpi(v.re), format_rpi(v.im)]
    c = complex(v)
    return [c.real, c.imag]


def step_json(f: PeriodicStepFunction) -> dict:
    return {"breakpoints": [format_rpi(b) for b in f.breakpoints] + ["1/1"],
            "values": [_amp_json(v) for v in f.values]}


def function_json(f: BandlimitedFunction) -> dict:
    """Cells of ``f̂`` as contiguous breakpoints with zero-filled gaps."""
    bps, vals = [], []
    for a, b, v in f.cells:
        if bps and bps[-1] == a:
            bps.pop()
        elif bps:
            vals.append(["0/1", "0/1"])
        bps.extend([a, b])
        vals.append(_amp_json(v))
    return {"breakpoints": [format_rpi(x) for x in bps], "values": vals}


def emit(results: list[TaskResult], fmt: str = "text", timing: bool = False) -> str:
    if fmt == "machine":
        return json.dumps([r.to_json(timing) for r in results], indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown output format {fmt!r}")
    lines = []
    for r in results:
        lines.append(f"CHECK {r.id} {r.verdict} residual={r.residual:.6e}")
        lines.extend(f"    {d}" for d in r.details)
        if timing and r.timing is not None:
            lines.append(f"    time {r.timing:.3f} s")
    return "".join(line + "\n" for line in lines)


def parse_machine(text: str) -> list[TaskResult]:
    return [TaskResult.from_json(obj) for obj in json.loads(text)]


# ----------------------------------------------------------------- scenario


@dataclass
class TaskSpec:
    id: str
    task: str
    args: dict
    expect: str | None = None


@dataclass
class Scenario:
    name: str
    dilation: DilationMatrix
    functions: dict[str, BandlimitedFunction]
    filters: dict[str, TrigPolyMatrix]
    tasks: list[TaskSpec]
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.dilation.scalar


@dataclass
class Options:
    seed: int = 0
    tolerance: float | None = None
    kmax: int | None = None
    grid: int | None = None
    jobs: int = 1


@dataclass(frozen=True)
class TaskDef:
    handler: Callable
    function_args: tuple[str, ...] = ()
    filter_args: tuple[str, ...] = ()
    uses: tuple[str, ...] = ()


REGISTRY: dict[str, TaskDef] = {}


def task(name: str, functions=(), filters=(), uses=()):
    def register(fn):
        REGISTRY[name] = TaskDef(fn, tuple(functions), tuple(filters), tuple(uses))
        return fn
    return register


def bundled_scenarios() -> list[str]:
    root = resources.files("ffkit") / "scenarios"
    return sorted(p.name[:-len(".scenario")] for p in root.iterdir() if p.name.endswith(".scenario"))


def resolve_path(path: str) -> Path | Any:
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("ffkit") / "scenarios" / f"{path}.scenario"
    if bundled.is_file():
        return bundled
    raise ScenarioError(f"scenario not found: {path}")


def load_scenario(path: str) -> Scenario:
    src = resolve_path(str(path))
    text = src.read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_json(obj, name=Path(str(path)).stem)


def _field(obj: dict, key: str, where: str):
    if key not in obj:
        raise ScenarioError(f"{where}: missing field '{key}'")
    return obj[key]


def _dilation(spec, where: str) -> DilationMatrix:
    if isinstance(spec, int):
        return DilationMatrix.of(spec)
    d = _field(spec, "d", where)
    mat = _field(spec, "M", where)
    try:
        dil = DilationMatrix.of(mat)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{where}.M: {exc}") from None
    if dil.d != d:
        raise ScenarioError(f"{where}: d = {d} but M is {dil.d}x{dil.d}")
    return dil


def _filter_from_json(obj: dict, d: int, where: str) -> TrigPolyMatrix:
    def number(x):
        return float(Fraction(x)) if isinstance(x, str) else float(x)

    try:
        entries = []
        for e in _field(obj, "entries", where):
            coeffs = [{"k": t["k"], "re": number(t.get("re", 0)), "im": number(t.get("im", 0))}
                      for t in _field(e, "coeffs", where)]
            entries.append({"row": e["row"], "col": e["col"], "coeffs": coeffs})
        return TrigPolyMatrix.from_json({"rows": obj["rows"], "cols": obj["cols"], "entries": entries}, d)
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def scenario_from_json(obj: dict, name: str = "scenario") -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    dil = _dilation(_field(obj, "dilation", "scenario"), "dilation")
    functions = {}
    for fname, terms in obj.get("functions", {}).items():
        where = f"functions.{fname}"
        try:
            functions[fname] = parse_function(terms)
        except ValueError as exc:
            msg = str(exc)
            raise ScenarioError(f"{where}: {'empty interval' if 'empty interval' in msg else msg}") from None
        except (KeyError, TypeError, ZeroDivisionError) as exc:
            raise ScenarioError(f"{where}: malformed term ({exc})") from None
    if functions and dil.d != 1:
        raise ScenarioError("bandlimited functions need a one-dimensional dilation")
    filters = {fname: _filter_from_json(f, dil.d, f"filters.{fname}") for fname, f in obj.get("filters", {}).items()}
    tasks, seen = [], {}
    for i, t in enumerate(_field(obj, "tasks", "scenario")):
        where = f"tasks[{i}]"
        tname = _field(t, "task", where)
        if tname not in REGISTRY:
            raise ScenarioError(f"{where}: unknown task '{tname}'; known tasks: {', '.join(REGISTRY)}")
        args = t.get("args", {})
        spec = REGISTRY[tname]
        for key in spec.function_args:
            refs = args.get(key)
            if refs is None or isinstance(refs, str) and refs in spec.uses:
                continue
            for ref in ([refs] if isinstance(refs, str) else refs):
                if ref not in functions:
                    raise ScenarioError(f"{where}.args.{key}: undefined function '{ref}'")
        for key in spec.filter_args:
            ref = args.get(key)
            if ref is not None and ref not in filters:
                raise ScenarioError(f"{where}.args.{key}: undefined filter '{ref}'")
        expect = t.get("expect")
        if expect not in (None, "PASS", "FAIL"):
            raise ScenarioError(f"{where}.expect must be PASS or FAIL")
        tid = t.get("id", tname)
        seen[tid] = seen.get(tid, 0) + 1
        if seen[tid] > 1:
            tid = f"{tid}#{seen[tid]}"
        tasks.append(TaskSpec(tid, tname, args, expect))
    seed = obj.get("seed")
    return Scenario(obj.get("name", name), dil, functions, filters, tasks,
                    int(seed) if seed is not None else None, dict(obj.get("tolerances", {})))


# ------------------------------------------------------------------ running


@dataclass
class Outcome:
    passed: bool
    residual: float
    residuals: dict = field(default_factory=dict)
    details: list = field(default_factory=list)
    step_functions: dict = field(default_factory=dict)


class Context:
    def __init__(self, scenario: Scenario, options: Options):
        self.scenario = scenario
        self.options = options
        self.state: dict[str, Any] = {}

    def system(self, args: dict, key: str, role: str = "Psi") -> BandlimitedSystem | None:
        refs = args.get(key)
        if refs is None:
            return None
        if isinstance(refs, str) and refs in self.state:
            return self.state[refs][key if key in self.state[refs] else "phi"]
        refs = [refs] if isinstance(refs, str) else refs
        return BandlimitedSystem(tuple((r, self.scenario.functions[r]) for r in refs), role=role)

    def filt(self, args: dict, key: str) -> TrigPolyMatrix | None:
        ref = args.get(key)
        return None if ref is None else self.scenario.filters[ref]

    def tolerance(self, name: str, default: float) -> float:
        if self.options.tolerance is not None:
            return self.options.tolerance
        return float(self.scenario.tolerances.get(name, default))

    def trials(self, args: dict) -> int:
        return int(args.get("trials", testfuncs.DEFAULT_TRIALS))


def resolve_seed(cli_seed: int | None, scenario: Scenario) -> int:
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get("FF_SEED")
    if env:
        return int(env)
    return scenario.seed if scenario.seed is not None else 0


def _run_one(spec: TaskSpec, ctx: Context) -> TaskResult:
    start = time.perf_counter()
    try:
        out = REGISTRY[spec.task].handler(spec.args, ctx)
        verdict = "PASS" if out.passed else "FAIL"
        details = list(out.details)
        if spec.expect is not None:
            details.append(f"observed {verdict}, expected {spec.expect}")
            verdict = "PASS" if verdict == spec.expect else "FAIL"
        res = TaskResult(spec.id, spec.task, verdict, float(out.residual), dict(out.residuals), details,
                         dict(out.step_functions))
    except Exception as exc:  # noqa: BLE001 - a task error must not stop the run
        res = TaskResult(spec.id, spec.task, "ERROR", math.inf, {}, [f"{type(exc).__name__}: {exc}"])
    res.timing = time.perf_counter() - start
    return res


def run(scenario: Scenario, options: Options | None = None) -> list[TaskResult]:
    """Execute the scenario's tasks; results come back in scenario order."""
    options = options or Options()
    ctx = Context(scenario, options)
    if options.jobs <= 1:
        return [_run_one(spec, ctx) for spec in scenario.tasks]

    def dependent(spec: TaskSpec) -> bool:
        uses = REGISTRY[spec.task].uses
        return any(isinstance(v, str) and v in uses for v in spec.args.values())

    results: dict[int, TaskResult] = {}
    free = [(i, s) for i, s in enumerate(scenario.tasks) if not dependent(s)]
    with ThreadPoolExecutor(max_workers=options.jobs) as pool:
        for (i, _), res in zip(free, pool.map(lambda item: _run_one(item[1], ctx), free)):
            results[i] = res
    for i, spec in enumerate(scenario.tasks):
        if i not in results:
            results[i] = _run_one(spec, ctx)
    return [results[i] for i in range(len(scenario.tasks))]


def exit_code(results: list[TaskResult]) -> int:
    return 0 if all(r.verdict == "PASS" for r in results) else 1


# -------------------------------------------------------------------- tasks


def _fmt_amp(v) -> str:
    if is_exact(v):
        return str(v.re) if v.im == 0 else f"{v.re}{'+' if v.im >= 0 else '-'}{abs(v.im)}i"
    c = complex(v)
    return f"{c.real:.12g}" if c.imag == 0 else f"{c.real:.12g}{c.imag:+.12g}i"


def _describe(f: PeriodicStepFunction) -> str:
    ends = list(f.breakpoints[1:]) + [Fraction(1)]
    return "; ".join(f"[{a}, {b})pi: {_fmt_amp(v)}" for a, b, v in zip(f.breakpoints, ends, f.values))


@task("dimfn", functions=("functions",))
def _dimfn(args, ctx):
    system = ctx.system(args, "functions", "Phi")
    dim = dimension_function(system)
    n = length(system)
    details = [f"length {n}", f"dimension {_describe(dim)}"]
    expected = args.get("expect_length")
    ok = expected is None or int(expected) == n
    return Outcome(ok, 0.0 if ok else abs(n - int(expected)), {}, details, {"dimension": step_json(dim)})


@task("vminus", functions=("psi", "dual"))
def _vminus(args, ctx):
    psi = ctx.system(args, "psi")
    dual = ctx.system(args, "dual")
    rep = integral_identity_check(psi, ctx.scenario.M, dual)
    m = abs(ctx.scenario.M)
    details = [
        f"dimension {_describe(rep.dimension)}",
        f"sup norm {rep.sup:g} (length of the negative-dilate space)",
        f"integral {_fmt_amp(rep.integral_pi)}*pi, expected 2*pi*s/(|M|-1) = {rep.expected_pi}*pi: "
        f"{'PASS' if rep.passed else 'FAIL'}",
    ]
    r1 = Fraction(len(psi), m - 1)
    if rep.constant is None:
        details.append("constant dimension: FAIL; no Riesz wavelet {Phi; Psi} with this Psi exists")
    else:
        match = is_exact(rep.constant) and rep.constant == r1 or abs(complex(rep.constant) - float(r1)) < 1e-12
        details.append(f"constant dimension {_fmt_amp(rep.constant)}; s/(|M|-1) = {r1}: "
                       f"{'PASS' if match else 'FAIL'}")
    details.append(f"certificate: {rep.certificate.statement}")
    return Outcome(rep.passed, rep.residual, {"integral": rep.residual}, details,
                   {"dimension": step_json(rep.dimension)})


def _lift_details(res, label: str) -> list[str]:
    return [f"generators {len(res.Phi)}", f"{label} residual {res.energy_check.residual:.6e} "
            f"over {len(res.energy_check.residuals)} trials (seed {res.seed})",
            f"certificate: {res.family.certificate.statement}"]


@task("lift", functions=("psi",))
def _lift(args, ctx):
    psi = ctx.system(args, "psi")
    mode = args.get("mode", "tight")
    res = lift_homogeneous(psi, ctx.scenario.M, mode=mode, seed=ctx.options.seed, trials=ctx.trials(args),
                           J=int(args.get("J", 0)))
    ctx.state["lift"] = {"phi": res.Phi, "psi": psi}
    residuals = {"energy": res.energy_check.residual}
    details = _lift_details(res, "energy identity")
    if res.tight_report is not None:
        residuals["tight"] = res.tight_report.residual
        details.append(f"tight identity {res.tight_report.verdict} residual {res.tight_report.residual:.6e}")
    tol = ctx.tolerance("lift", 1e-8)
    ok = res.passed and max(residuals.values()) <= tol
    steps = {name: function_json(f) for name, f in res.Phi.members}
    return Outcome(ok, max(residuals.values()), residuals, details, steps)


@task("lift-dual", functions=("psi", "dual"))
def _lift_dual(args, ctx):
    psi = ctx.system(args, "psi")
    dual = ctx.system(args, "dual")
    res = lift_homogeneous(psi, ctx.scenario.M, mode="dual", Psi_dual=dual, seed=ctx.options.seed,
                           trials=ctx.trials(args), J=int(args.get("J", 0)))
    ctx.state["lift-dual"] = {"phi": res.Phi, "phi_dual": res.Phi_dual, "psi": psi, "psi_dual": dual}
    residuals = {"mixed": res.energy_check.residual, "rows": res.rows_residual,
                 "bessel": res.bessel_check.residual, "dual": res.dual_report.residual}
    details = _lift_details(res, "mixed identity")
    details.append(f"row projection residual {res.rows_residual:.6e}")
    details.append(f"dual frame identity {res.dual_report.verdict} residual {res.dual_report.residual:.6e}")
    steps = {name: function_json(f) for name, f in res.Phi.members}
    steps.update({f"dual {name}": function_json(f) for name, f in res.Phi_dual.members})
    return Outcome(res.passed, max(residuals.values()), residuals, details, steps)


@task("reduce", functions=("functions",), filters=("high",))
def _reduce(args, ctx):
    if "high" in args:
        rep = compact_support_reduce_1d(ctx.filt(args, "high"), ctx.scenario.M, args.get("r"),
                                        tol=ctx.tolerance("reduce", 1e-6))
        b = rep.reduced
        details = [f"high-pass rows {ctx.filt(args, 'high').shape[0]} -> {b.shape[0]}",
                   f"polyphase Gram residual {rep.residual:.6e}", *rep.factor.notes]
        for (k,), blk in b.coeffs.items():
            details.append(f"k={k}: " + ", ".join(f"{complex(x).real:.12g}{complex(x).imag:+.12g}i"
                                                    for x in blk[:, 0]))
        return Outcome(rep.passed and rep.residual <= rep.factor.tolerance, rep.residual,
                       {"gram": rep.residual}, details)
    psi = ctx.system(args, "functions")
    rep = reduce_wavelet_generators(psi, ctx.scenario.M, seed=ctx.options.seed, trials=ctx.trials(args))
    details = [f"generators {len(psi)} -> {len(rep.Psi)}",
               f"per-scale energy residual {rep.check.residual:.6e} for scales {rep.scales[0]}..{rep.scales[1]}"]
    steps = {name: function_json(f) for name, f in rep.Psi.members}
    tol = ctx.tolerance("reduce", 1e-8)
    return Outcome(rep.check.residual <= tol, rep.check.residual, {"energy": rep.check.residual}, details, steps)


def _fb_outcome(rep, extra=()) -> Outcome:
    details = [f"{rep.identity} ({rep.mode}): " + ", ".join(f"{k} {v:.6e}" for k, v in rep.residuals.items())]
    if rep.expected_s is not None:
        details.append(f"shape r={rep.r}, s={rep.s}, required s=r(|det M|-1)={rep.expected_s}: "
                       f"{'PASS' if rep.shape_ok else 'FAIL'}")
    details.extend(rep.notes)
    passed, residual = rep.passed, rep.residual
    residuals = {f"{rep.identity} {k}": v for k, v in rep.residuals.items()}
    for other in extra:
        details.append(f"{other.identity} ({other.mode}): "
                       + ", ".join(f"{k} {v:.6e}" for k, v in other.residuals.items()))
        details.extend(other.notes)
        passed = passed and other.passed
        residual = max(residual, other.residual)
        residuals.update({f"{other.identity} {k}": v for k, v in other.residuals.items()})
    return Outcome(passed, residual, residuals, details)


def _generalized_args(args, ctx):
    kmax = ctx.options.kmax if ctx.options.kmax is not None else args.get("kmax", 8)
    grid = ctx.options.grid if ctx.options.grid is not None else args.get("grid")
    return int(kmax), (int(grid) if grid is not None else None)


@task("check-fb-orthogonal", filters=("low", "high"))
def _fb_orth(args, ctx):
    rep = check_orthogonal_fb(ctx.filt(args, "low"), ctx.filt(args, "high"), ctx.scenario.dilation,
                              tol=ctx.tolerance("check-fb-orthogonal", 1e-12))
    return _fb_outcome(rep)


@task("check-fb-biorthogonal", filters=("low", "high", "low_dual", "high_dual"))
def _fb_bi(args, ctx):
    f = lambda k: ctx.filt(args, k)  # noqa: E731
    rep = check_biorthogonal_fb(f("low"), f("high"), f("low_dual"), f("high_dual"), ctx.scenario.dilation,
                                tol=ctx.tolerance("check-fb-biorthogonal", 1e-12))
    return _fb_outcome(rep)


@task("check-fb-tight", filters=("low", "high"))
def _fb_tight(args, ctx):
    a, b = ctx.filt(args, "low"), ctx.filt(args, "high")
    dil = ctx.scenario.dilation
    rep = check_tight_fb(a, b, dil, tol=ctx.tolerance("check-fb-tight", 1e-12))
    extra = []
    if args.get("generalized", False):
        kmax, grid = _generalized_args(args, ctx)
        phi = RefinableCascade(a, dil)
        extra.append(check_generalized_tight(a, b, dil, phi, N=grid, kmax=kmax))
    return _fb_outcome(rep, extra)


@task("check-fb-dual", filters=("low", "high", "low_dual", "high_dual", "theta"))
def _fb_dual(args, ctx):
    f = lambda k: ctx.filt(args, k)  # noqa: E731
    dil = ctx.scenario.dilation
    theta = f("theta")
    reports = []
    if theta is None:
        reports.append(check_dual_fb(f("low"), f("high"), f("low_dual"), f("high_dual"), dil,
                                     tol=ctx.tolerance("check-fb-dual", 1e-12)))
    if args.get("generalized", False) or theta is not None:
        kmax, grid = _generalized_args(args, ctx)
        phi, phi_d = RefinableCascade(f("low"), dil), RefinableCascade(f("low_dual"), dil)
        reports.append(check_generalized_dual(f("low"), f("high"), f("low_dual"), f("high_dual"), dil,
                                              phi, phi_d, theta, N=grid, kmax=kmax))
    return _fb_outcome(reports[0], reports[1:])


@task("cascade", filters=("low",))
def _cascade(args, ctx):
    a = ctx.filt(args, "low")
    dil = ctx.scenario.dilation
    J = int(args.get("J", 25))
    v = args.get("v")
    casc = RefinableCascade(a, dil, v=None if v is None else np.array(v, dtype=complex), depth=J)
    n = ctx.options.grid or int(args.get("grid", 256 if dil.d == 1 else 32))
    axis = -np.pi + (np.arange(n) + 0.5) * (2 * np.pi / n)
    pts = axis[:, None] if dil.d == 1 else np.stack(np.meshgrid(axis, axis, indexing="ij"), -1).reshape(-1, 2)
    lifted = pts @ dil.matrix.T.astype(float).T
    # φ̂(Mᵀξ) − â(ξ)φ̂(ξ) measures how far the depth-J product is from refinable
    refine = np.einsum("nij,nj->ni", a.evaluate(pts), casc(pts)) - casc(lifted)
    residual = float(np.max(np.abs(refine)))
    origin = casc(np.zeros(dil.d)) - casc.v
    details = [f"depth J={J}, start vector " + ", ".join(f"{x.real:.12g}{x.imag:+.12g}i" for x in casc.v),
               f"refinement residual {residual:.6e} on {len(pts)} grid points",
               f"phi_hat(0) - v = {float(np.max(np.abs(origin))):.3e}"]
    for x in args.get("points_pi", [Fraction(1, 2), 1]):
        q = float(Fraction(x)) * np.pi
        val = casc(q if dil.d == 1 else np.full(dil.d, q))
        details.append(f"|phi_hat({x}pi)| = " + ", ".join(f"{abs(z):.12g}" for z in val))
    tol = ctx.tolerance("cascade", 1e-6)
    residual = max(residual, float(np.max(np.abs(origin))))
    return Outcome(residual <= tol, residual, {"refinement": residual}, details)


@task("limit-check", filters=("low", "low_dual", "theta"))
def _limit(args, ctx):
    rep = check_limit_condition(ctx.filt(args, "low"), ctx.scenario.dilation, j_max=int(args.get("j_max", 20)),
                                tol=ctx.tolerance("limit-check", 1e-4), a_dual=ctx.filt(args, "low_dual"),
                                theta=ctx.filt(args, "theta"))
    shown = [1, 5, 10, 15, 20]
    details = [f"target <1, h> = {rep.target:.12g}",
               "gap by j: " + ", ".join(f"j={j} {rep.gaps[j - 1]:.3e}" for j in shown if j <= len(rep.gaps)),
               *rep.notes]
    return Outcome(rep.passed, rep.residual, {"gap": rep.residual}, details)


@task("fejer-riesz", filters=("filter",))
def _fejer(args, ctx):
    P = ctx.filt(args, "filter")
    tol = ctx.tolerance("fejer-riesz", 1e-6)
    if P.shape == (1, 1):
        v = fejer_riesz_scalar(P.entry(0, 0))
        V = v.as_matrix()
    else:
        rep = fejer_riesz_matrix(P, tol=tol)
        V = rep.factor
    xi = -np.pi + (np.arange(1024) + 0.5) * (2 * np.pi / 1024)
    vals, target = V.evaluate(xi), P.evaluate(xi)
    gram = np.swapaxes(vals.conj(), -1, -2) @ vals
    scale = float(np.max(np.linalg.norm(target, ord=2, axis=(-2, -1))))
    residual = float(np.max(np.abs(gram - target)))
    details = [f"factor degree {V.degree()} (input degree {P.degree()})",
               f"|v*v - P| = {residual:.6e}, scale (1+|P|) = {1 + scale:.6g}"]
    for (k,), blk in V.coeffs.items():
        details.append(f"k={k}: " + ", ".join(f"{z.real:.12g}{z.imag:+.12g}i" for z in blk.ravel()))
    return Outcome(residual <= tol * (1 + scale), residual, {"gram": residual}, details)


def _spectral_generators(a: TrigPolyMatrix, b: TrigPolyMatrix, dil: DilationMatrix):
    casc = RefinableCascade(a, dil)
    psi_hat = casc.wavelet(b)
    phi = [SpectralFunction(f"phi{i + 1}", casc.component(i)) for i in range(a.shape[0])]
    psi = [SpectralFunction(f"psi{i + 1}", (lambda i: lambda x: psi_hat(x)[..., i])(i)) for i in range(b.shape[0])]
    return phi, psi


def _scale_sweep(check: Callable[[int], Any], scales) -> Outcome:
    details, residuals, verdicts = [], {}, []
    window = ""
    for J in scales:
        rep = check(J)
        verdicts.append(rep.verdict)
        residuals[f"J={J}"] = rep.residual
        details.append(f"J={J}: {rep.identity} {rep.verdict} residual {rep.residual:.6e}"
                       + (f", refinement residual {rep.constants['refinement_residual']:.6e}"
                          if "refinement_residual" in rep.constants else ""))
        window = rep.window
        details.extend(rep.notes)
    same = len(set(verdicts)) == 1
    details.append(f"verdicts identical across base scales {list(scales)}: {'yes' if same else 'no'}")
    if window:
        details.append(window)
    return Outcome(same and verdicts[0] == "PASS", max(residuals.values(), default=0.0), residuals, details)


@task("verify-tight", functions=("phi", "psi"), filters=("low", "high"), uses=("lift",))
def _verify_tight(args, ctx):
    M = ctx.scenario.M
    seed = ctx.options.seed
    scales = args.get("scales", list(DEFAULT_SCALES))
    if "low" in args:
        phi, psi = _spectral_generators(ctx.filt(args, "low"), ctx.filt(args, "high"), ctx.scenario.dilation)
        span = FILTER_SPAN
    else:
        psi_sys = ctx.system(args, "psi") or ctx.state.get("lift", {}).get("psi")
        phi_sys = ctx.system(args, "phi", "Phi")
        if psi_sys is None:
            raise ValueError("verify-tight needs psi (or a preceding lift)")
        psi = psi_sys.functions
        phi = phi_sys.functions if phi_sys is not None else []
        span = trial_span(psi + phi)
    tests = testfuncs.trial_functions(seed, span, ctx.trials(args))
    if args.get("homogeneous", False):
        rep = check_homogeneous_tight(psi, M, tests, seed=seed)
        return Outcome(rep.passed, rep.residual, {"homogeneous": rep.residual},
                       [f"{rep.identity} {rep.verdict} residual {rep.residual:.6e}", rep.window])
    return _scale_sweep(lambda J: check_tight(phi, psi, M, tests, J=J, seed=seed), scales)


@task("verify-dual", functions=("phi", "psi", "phi_dual", "psi_dual"),
      filters=("low", "high", "low_dual", "high_dual"), uses=("lift-dual",))
def _verify_dual(args, ctx):
    M = ctx.scenario.M
    seed = ctx.options.seed
    scales = args.get("scales", list(DEFAULT_SCALES))
    if "low" in args:
        dil = ctx.scenario.dilation
        phi, psi = _spectral_generators(ctx.filt(args, "low"), ctx.filt(args, "high"), dil)
        phi_d, psi_d = _spectral_generators(ctx.filt(args, "low_dual"), ctx.filt(args, "high_dual"), dil)
        span = FILTER_SPAN
    else:
        stored = ctx.state.get("lift-dual", {})
        get = lambda key, role: ctx.system(args, key, role) or stored.get(key)  # noqa: E731
        psi_s, psi_ds = get("psi", "Psi"), get("psi_dual", "Psi")
        phi_s, phi_ds = get("phi", "Phi"), get("phi_dual", "Phi")
        if psi_s is None:
            raise ValueError("verify-dual needs psi (or a preceding lift-dual)")
        psi = psi_s.functions
        psi_d = psi_ds.functions if psi_ds is not None else psi
        phi = phi_s.functions if phi_s is not None else []
        phi_d = phi_ds.functions if phi_ds is not None else phi
        span = trial_span(psi + psi_d + phi + phi_d)
    pairs = testfuncs.trial_pairs(seed, span, ctx.trials(args))
    if args.get("homogeneous", False):
        rep = check_dual([], psi, [], psi_d, M, pairs, homogeneous=True, seed=seed)
        return Outcome(rep.passed, rep.residual, {"homogeneous": rep.residual},
                       [f"{rep.identity} {rep.verdict} residual {rep.residual:.6e}", rep.window])
    return _scale_sweep(lambda J: check_dual(phi, psi, phi_d, psi_d, M, pairs, J=J, seed=seed), scales)


@task("verify-orthonormal", functions=("psi", "psi_dual"))
def _verify_ortho(args, ctx):
    psi = ctx.system(args, "psi")
    psi_d = ctx.system(args, "psi_dual")
    window = tuple(args.get("window", (0, 3)))
    rep = check_orthonormal_biorthogonal(psi.functions, ctx.scenario.M,
                                         psi_d.functions if psi_d is not None else None, window)
    tol = ctx.tolerance("verify-orthonormal", rep.tolerance)
    ok = rep.residual <= tol
    return Outcome(ok, rep.residual, {"inner products": rep.residual},
                   [f"{rep.identity} {'PASS' if ok else 'FAIL'} over {len(rep.residuals)} inner products",
                    rep.window])


@task("bounds", functions=("phi", "psi"))
def _bounds(args, ctx):
    psi = ctx.system(args, "psi").functions
    phi_sys = ctx.system(args, "phi", "Phi")
    phi = tuple(phi_sys.functions) if phi_sys is not None else ()
    kind = "nonhomogeneous" if phi else args.get("kind", "homogeneous")
    mode = args.get("mode", "frame")
    system = AffineSystem(ctx.scenario.M, tuple(psi), phi, kind)
    tests = testfuncs.trial_functions(ctx.options.seed, trial_span(psi + list(phi)), ctx.trials(args))
    rep = estimate_bounds(system, tests, mode=mode, seed=ctx.options.seed)
    lo, hi = rep.bounds
    details = [f"{rep.identity}: lower {lo:.12g}, upper {hi:.12g}", *rep.notes]
    if rep.window:
        details.append(rep.window)
    expected = args.get("expect_bounds")
    if expected is None:
        return Outcome(True, 0.0, {}, details)
    gap = max(abs(lo - float(expected[0])), abs(hi - float(expected[1])))
    details.append(f"expected bounds {expected[0]}, {expected[1]}")
    return Outcome(gap <= ctx.tolerance("bounds", 1e-8), gap, {"bounds": gap}, details)
