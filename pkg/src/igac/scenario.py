"""Declarative experiment scenarios: parsing, validation, execution and output.

A scenario is a small TOML document::

    id = "gauss_l1"
    kind = "complexity_trace"

    [model]
    name = "uncorrelated_gaussian"
    params = { l = 1 }

    [settings]
    theta0 = [0.0, 1.0]
    v0 = [1.4142135623730951, 0.0]
    tau = { start = 0.5, stop = 20.0, num = 400 }

    [expect]
    regime = "linear"
    min_r2 = 0.999

Supported kinds are ``metric_check``, ``geodesic_ivp``, ``geodesic_bvp``,
``complexity_trace``, ``ratio_table`` and ``mre_update``. See
:data:`KIND_FIELDS` for the settings each accepts.
"""

from __future__ import annotations

import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import complexity as cx
from . import geodesic as geo
from . import mre
from .catalog import CATALOG, RATIO_FAMILIES, build
from .catalog import formulas as cf
from .errors import ParamOutOfRange, ParseError, StageError, ValidationError
from .manifold import QuadratureSpec, metric_analytic, metric_numeric

KINDS = ("metric_check", "geodesic_ivp", "geodesic_bvp", "complexity_trace", "ratio_table", "mre_update")
DEFAULT_OUT = "igac_out"
DEFAULT_RATIO_FAMILIES = ("bivariate_strong", "trivariate_weak", "trivariate_mildly_weak", "trivariate_strong")


# ---------------------------------------------------------------------------
# field schema

_REQUIRED = object()


@dataclass(frozen=True)
class Field:
    """One settings entry: converter, default (or required) and a check."""

    convert: Callable
    default: Any = _REQUIRED
    check: Callable | None = None
    rule: str = ""


def _float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(f"expected a number, got {v!r}")
    return float(v)


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"expected an integer, got {v!r}")
    return v


def _vector(v):
    if not isinstance(v, list) or not v:
        raise TypeError(f"expected a non-empty list of numbers, got {v!r}")
    return tuple(_float(x) for x in v)


def _points(v):
    if not isinstance(v, list) or not v:
        raise TypeError("expected a non-empty list of points")
    return tuple(_vector(p) for p in v)


def _str(v):
    if not isinstance(v, str):
        raise TypeError(f"expected a string, got {v!r}")
    return v


def _str_list(v):
    if isinstance(v, str):
        return (v,)
    if not isinstance(v, list) or not v:
        raise TypeError("expected a string or a non-empty list of strings")
    return tuple(_str(x) for x in v)


def _table(v):
    if not isinstance(v, dict):
        raise TypeError(f"expected a table, got {v!r}")
    return dict(v)


def parse_grid(v) -> np.ndarray:
    """Grid from ``"a:b:step"`` (inclusive of ``b`` when it lands on it) or ``{start, stop, num}``."""
    if isinstance(v, str):
        parts = v.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {v!r} must look like a:b:step")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ValueError(f"grid {v!r} needs step > 0 and b >= a")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return a + step * np.arange(n)
    if isinstance(v, dict):
        extra = set(v) - {"start", "stop", "num"}
        if extra or not {"start", "stop", "num"} <= set(v):
            raise ValueError("grid table needs exactly start, stop, num")
        num = _int(v["num"])
        if num < 2:
            raise ValueError("grid needs num >= 2")
        a, b = _float(v["start"]), _float(v["stop"])
        if not b > a:
            raise ValueError("grid needs stop > start")
        return np.linspace(a, b, num)
    raise TypeError(f"expected 'a:b:step' or {{start, stop, num}}, got {v!r}")


def _positive(x):
    return x > 0


def _fraction(x):
    return 0 < x <= 1


_COMMON = {"tol": Field(_float, 1e-10, _positive, "> 0"), "seed": Field(_int, 0)}

KIND_FIELDS: dict[str, dict[str, Field]] = {
    "metric_check": {
        "points": Field(_points, None),
        "n_points": Field(_int, 20, _positive, "> 0"),
        "sample_lower": Field(_vector, None),
        "sample_upper": Field(_vector, None),
        "quad_order": Field(_int, 8, _positive, "> 0"),
        "quad_rtol": Field(_float, 1e-10, _positive, "> 0"),
    },
    "geodesic_ivp": {
        "theta0": Field(_vector),
        "v0": Field(_vector),
        "tau_max": Field(_float, _REQUIRED, lambda x: x != 0, "non-zero"),
        "samples": Field(_int, None, lambda x: x >= 2, ">= 2"),
    },
    "geodesic_bvp": {
        "theta_initial": Field(_vector),
        "theta_final": Field(_vector),
        "span": Field(_float, 1.0, _positive, "> 0"),
        "v_guess": Field(_vector, None),
        "samples": Field(_int, None, lambda x: x >= 2, ">= 2"),
    },
    "complexity_trace": {
        "theta0": Field(_vector),
        "v0": Field(_vector),
        "tau": Field(parse_grid, _REQUIRED, lambda g: g[0] > 0 and np.all(np.diff(g) > 0), "positive, increasing"),
        "s0": Field(_float, 0.0, lambda x: x >= 0, ">= 0"),
        "tail": Field(_float, 0.5, _fraction, "in (0, 1]"),
        "ks_window": Field(_float, None, _fraction, "in (0, 1]"),
        "quantity": Field(_str, "ige", lambda q: q in ("volume", "igc", "ige"), "one of volume, igc, ige"),
        "volume_method": Field(_str, "auto", lambda m: m in ("auto", "factorized", "box"), "one of auto, factorized, box"),
    },
    "ratio_table": {
        "families": Field(_str_list, DEFAULT_RATIO_FAMILIES),
        "rho_grid": Field(parse_grid),
    },
    "mre_update": {
        "grid_csv": Field(_str, None),
        "theta": Field(_vector, None),
        "weights": Field(_vector, None),
        "prior": Field(_vector, None),
        "likelihood": Field(_table, None),
        "gaussian": Field(_table, None),
        "observed": Field(lambda v: v if isinstance(v, (str, int)) and not isinstance(v, bool) else _str(v)),
        "constraint": Field(_table, None),
    },
}

EXPECT_FIELDS: dict[str, Field] = {
    "regime": Field(_str, None, lambda r: r in cx.REGIMES + ("ambiguous",), "a regime name"),
    "min_r2": Field(_float, None),
    "coefficient": Field(_table, None),
    "ks_min": Field(_float, None),
    "ks_max": Field(_float, None),
    "max_compare_diff": Field(_float, None),
    "max_rel_err": Field(_float, None),
    "max_speed_drift": Field(_float, None),
    "theta_end": Field(_vector, None),
    "theta_end_tol": Field(_float, 1e-6),
    "v0": Field(_vector, None),
    "v0_tol": Field(_float, 1e-6),
    "monotone": Field(_str, None, lambda m: m in ("increasing", "decreasing"), "increasing or decreasing"),
    "beta": Field(_float, None),
    "beta_tol": Field(_float, 1e-10),
    "posterior": Field(_vector, None),
    "posterior_tol": Field(_float, 1e-10),
    "max_moment_residual": Field(_float, None),
}

NEEDS_MODEL = {"metric_check", "geodesic_ivp", "geodesic_bvp", "complexity_trace"}
CLOSED_FORMS = ("spin_integrable_exact", "scattering_igc", "scattering_ige", "embedded_ige")


@dataclass(frozen=True)
class ModelRef:
    name: str
    params: dict


@dataclass(frozen=True)
class Scenario:
    """Validated scenario with all defaults filled in."""

    id: str
    kind: str
    model: ModelRef | None
    settings: dict
    expect: dict
    compare: dict | None = None
    output: str | None = None
    base_dir: Path | None = None


def _fill(section: dict, schema: dict, prefix: str, errors: list) -> dict:
    out = {}
    for key in section:
        if key not in schema:
            errors.append((f"{prefix}.{key}", f"unknown field; expected one of {', '.join(sorted(schema))}"))
    for key, fld in schema.items():
        if key not in section:
            if fld.default is _REQUIRED:
                errors.append((f"{prefix}.{key}", "required field missing"))
            else:
                out[key] = fld.default
            continue
        try:
            val = fld.convert(section[key])
        except (TypeError, ValueError) as exc:
            errors.append((f"{prefix}.{key}", str(exc)))
            continue
        if fld.check is not None and not fld.check(val):
            errors.append((f"{prefix}.{key}", f"must be {fld.rule}"))
            continue
        out[key] = val
    return out


def _toml_line(exc: Exception) -> int | None:
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def parse_scenario(text: str, default_id: str = "scenario", base_dir=None) -> Scenario:
    """Parse and validate scenario text.

    Raises
    ------
    ParseError
        Malformed TOML (with the offending line when known) or a wrong
        top-level structure.
    ValidationError
        Field-level problems, all collected, including catalog domain
        violations (the message names the violated bound).
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc), line=_toml_line(exc)) from exc

    errors: list = []
    top = {"id", "kind", "output", "model", "settings", "expect", "compare"}
    for key in doc:
        if key not in top:
            errors.append((key, f"unknown top-level field; expected one of {', '.join(sorted(top))}"))
    kind = doc.get("kind")
    if kind is None:
        raise ValidationError([("kind", "required field missing")])
    if kind not in KINDS:
        raise ValidationError([("kind", f"{kind!r} is not one of {', '.join(KINDS)}")])
    sid = doc.get("id", default_id)
    if not isinstance(sid, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", sid):
        errors.append(("id", "must be a non-empty string of letters, digits, '_', '-', '.'"))
    for sec in ("model", "settings", "expect", "compare"):
        if sec in doc and not isinstance(doc[sec], dict):
            raise ParseError(f"[{sec}] must be a table", field=sec)

    settings = _fill(doc.get("settings", {}), {**_COMMON, **KIND_FIELDS[kind]}, "settings", errors)
    expect = _fill(doc.get("expect", {}), EXPECT_FIELDS, "expect", errors)
    expect = {k: v for k, v in expect.items() if v is not None}

    model = None
    if kind in NEEDS_MODEL:
        msec = doc.get("model")
        if msec is None or "name" not in msec:
            errors.append(("model.name", "required field missing"))
        else:
            model = _validate_model(msec, errors)
    elif "model" in doc:
        errors.append(("model", f"not used by kind {kind}"))

    compare = doc.get("compare")
    if compare is not None:
        if kind != "complexity_trace":
            errors.append(("compare", "only complexity_trace scenarios take a comparison"))
        elif compare.get("closed_form") not in CLOSED_FORMS:
            errors.append(("compare.closed_form", f"must be one of {', '.join(CLOSED_FORMS)}"))
        elif not isinstance(compare.get("params", {}), dict):
            errors.append(("compare.params", "must be a table"))

    if not errors:
        _cross_checks(kind, settings, model, errors)
    if errors:
        raise ValidationError(errors)
    return Scenario(sid, kind, model, settings, expect, compare, doc.get("output"), Path(base_dir) if base_dir else None)


def _validate_model(msec: dict, errors: list) -> ModelRef | None:
    name = msec["name"]
    extra = set(msec) - {"name", "params"}
    if extra:
        errors.append(("model", f"unknown fields {sorted(extra)}"))
    if name not in CATALOG:
        errors.append(("model.name", f"unknown model {name!r}"))
        return None
    params = msec.get("params", {})
    if not isinstance(params, dict):
        errors.append(("model.params", "must be a table"))
        return None
    try:
        resolved = CATALOG[name].resolve(params)
    except ParamOutOfRange as exc:
        errors.append((f"model.params.{exc.name}", f"value {exc.value!r} outside domain {exc.bound}"))
        return None
    except (TypeError, ValueError) as exc:
        errors.append(("model.params", str(exc)))
        return None
    return ModelRef(name, resolved)


def _cross_checks(kind: str, s: dict, model: ModelRef | None, errors: list):
    dim = CATALOG[model.name].dim_rule(model.params) if model else None
    for key in ("theta0", "v0", "theta_initial", "theta_final", "v_guess", "sample_lower", "sample_upper"):
        if s.get(key) is not None and dim is not None and len(s[key]) != dim:
            errors.append((f"settings.{key}", f"needs {dim} components for model {model.name}"))
    for pt in s.get("points") or ():
        if dim is not None and len(pt) != dim:
            errors.append(("settings.points", f"every point needs {dim} components"))
            break
    if kind == "metric_check" and s["points"] is None and (s["sample_lower"] is None or s["sample_upper"] is None):
        errors.append(("settings.points", "give points or both sample_lower and sample_upper"))
    if kind == "ratio_table":
        for fam in s["families"]:
            fn = RATIO_FAMILIES.get(fam)
            if fn is None:
                errors.append(("settings.families", f"unknown family {fam!r}; known: {', '.join(RATIO_FAMILIES)}"))
                continue
            for r in s["rho_grid"]:
                try:
                    fn(float(r))
                except ParamOutOfRange as exc:
                    errors.append(("settings.rho_grid", f"rho={r!r} outside the {fam} domain {exc.bound}"))
                    break
    if kind == "mre_update":
        sources = [k for k in ("grid_csv", "theta", "gaussian") if s[k] is not None]
        if len(sources) != 1:
            errors.append(("settings", "give exactly one of grid_csv, theta (inline grid) or gaussian"))
        if s["theta"] is not None and (s["prior"] is None or s["likelihood"] is None):
            errors.append(("settings", "an inline grid needs theta, prior and likelihood"))
        c = s["constraint"]
        if c is not None:
            if c.get("f") not in ("identity", "square"):
                errors.append(("settings.constraint.f", "must be 'identity' or 'square'"))
            if not isinstance(c.get("target"), (int, float)) or isinstance(c.get("target"), bool):
                errors.append(("settings.constraint.target", "required number"))


def load_scenario(path) -> Scenario:
    """Read and validate one scenario file; its stem is the default id."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return parse_scenario(text, default_id=path.stem, base_dir=path.parent)
    except ParseError as exc:
        err = ParseError(f"{path}: {exc}")
        err.line, err.field = exc.line, exc.field
        raise err from exc
    except ValidationError as exc:
        raise ValidationError([(f"{path.name}:{f}", m) for f, m in exc.errors]) from exc


# ---------------------------------------------------------------------------
# output formatting


def fmt_number(v) -> str:
    """Round-trip exact text for a float (17 significant digits)."""
    return format(float(v), ".17g")


def write_csv(header, rows, path) -> Path:
    """Write rows of numbers with a header, ``'\\n'`` line endings, 17 significant digits.

    Raises
    ------
    OSError
        With the target path in the message.
    """
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(fmt_number(x) for x in row) for row in rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_trace_csv(trace: cx.ComplexityTrace, path) -> Path:
    rows = zip(trace.tau, trace.volume, trace.igc, trace.ige)
    return write_csv(("tau", "volume", "igc", "ige"), rows, path)


def write_path_csv(path_obj: geo.GeodesicPath, path, tau=None) -> Path:
    n = path_obj.dim
    if tau is None:
        tau, th, v = path_obj.tau, path_obj.theta, path_obj.velocity
    else:
        th, v = path_obj.theta_at(tau), path_obj.velocity_at(tau)
    header = ["tau"] + [f"theta_{k + 1}" for k in range(n)] + [f"v_{k + 1}" for k in range(n)]
    rows = (np.concatenate([[t], a, b]) for t, a, b in zip(tau, th, v))
    return write_csv(header, rows, path)


def _coef_text(v: float) -> str:
    a = abs(v)
    return f"{v:.6f}" if a == 0 or 1e-4 <= a < 1e6 else f"{v:.6e}"


def fit_report(fit: cx.GrowthFit, comparison: dict | None = None, extras: dict | None = None) -> tuple[str, dict]:
    """Text and JSON-ready dict describing a growth fit and optional comparison.

    The text starts with ``regime=<name>`` followed by the coefficients and
    R-squared; a comparison block lists ``|numeric - closed_form|`` per tau.
    """
    head = " ".join([f"regime={fit.regime}"] + [f"{k}={_coef_text(v)}" for k, v in fit.coefficients.items()] + [f"r2={fit.r2:.6f}"])
    lines = [head, f"quantity={fit.quantity} window=[{fit.window[0]:.6g}, {fit.window[1]:.6g}]"]
    if fit.note:
        lines.append(f"note: {fit.note}")
    for name, (coef, r2) in fit.candidates.items():
        lines.append(f"  candidate {name}: r2={r2:.6f} " + " ".join(f"{k}={_coef_text(v)}" for k, v in coef.items()))
    for k, v in (extras or {}).items():
        lines.append(f"{k}={v}")
    data = {"fit": fit.to_dict(), **(extras or {})}
    if comparison is not None:
        lines.append(f"comparison against {comparison['closed_form']} ({comparison['quantity']}):")
        lines.append("  tau numeric closed_form abs_diff")
        for t, a, b, d in zip(comparison["tau"], comparison["numeric"], comparison["closed"], comparison["abs_diff"]):
            lines.append(f"  {fmt_number(t)} {fmt_number(a)} {fmt_number(b)} {fmt_number(d)}")
        data["comparison"] = {k: (list(map(float, v)) if isinstance(v, np.ndarray) else v) for k, v in comparison.items()}
    return "\n".join(lines) + "\n", data


# ---------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class Assertion:
    """Outcome of one expectation, with the measured value and the bound."""

    name: str
    measured: Any
    bound: Any
    passed: bool

    def text(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: measured={self.measured} bound={self.bound}"


@dataclass
class RunReport:
    scenario_id: str
    kind: str
    files: list = field(default_factory=list)
    fit: cx.GrowthFit | None = None
    assertions: list = field(default_factory=list)
    duration: float = 0.0
    results: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "kind": self.kind,
            "files": [str(f) for f in self.files],
            "fit": self.fit.to_dict() if self.fit else None,
            "assertions": [
                {"name": a.name, "measured": _jsonable(a.measured), "bound": _jsonable(a.bound), "passed": a.passed}
                for a in self.assertions
            ],
            "passed": self.passed,
            "duration_s": self.duration,
            "results": {k: _jsonable(v) for k, v in self.results.items()},
        }


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


class _Stage:
    """Context manager that tags any exception with a pipeline stage name."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


def resolve_out_dir(scenario: Scenario, out=None) -> Path:
    """``out`` argument, else the scenario's ``output``, else ``$IGAC_OUT``, else ``./igac_out``."""
    if out:
        return Path(out)
    if scenario.output:
        base = scenario.base_dir or Path.cwd()
        return base / scenario.output
    return Path(os.environ.get("IGAC_OUT", DEFAULT_OUT))


def _upper(name, measured, bound):
    return Assertion(name, measured, f"<= {bound}", bool(measured <= bound))


def run(scenario: Scenario, out=None) -> RunReport:
    """Execute a scenario, write its files and evaluate its expectations.

    Raises
    ------
    StageError
        Wraps any module error with the stage (build, integrate, ...) where
        it occurred.
    """
    t0 = time.perf_counter()
    out_dir = resolve_out_dir(scenario, out)
    report = RunReport(scenario.id, scenario.kind)
    runner = _RUNNERS[scenario.kind]
    model = None
    if scenario.model is not None:
        with _Stage("build"):
            model = build(scenario.model.name, **scenario.model.params)
    runner(scenario, model, out_dir, report)
    report.duration = time.perf_counter() - t0
    with _Stage("write"):
        p = out_dir / f"{scenario.id}_report.json"
        p.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        report.files.append(p)
    return report


def _run_metric_check(sc: Scenario, model, out_dir: Path, rep: RunReport):
    s = sc.settings
    with _Stage("sample"):
        if s["points"] is not None:
            pts = np.array(s["points"], dtype=float)
        else:
            rng = np.random.default_rng(s["seed"])
            lo, hi = np.array(s["sample_lower"]), np.array(s["sample_upper"])
            pts = lo + (hi - lo) * rng.random((s["n_points"], lo.size))
    quad = QuadratureSpec(order=s["quad_order"], rtol=s["quad_rtol"])
    rows = []
    with _Stage("metric"):
        for p in pts:
            ga = metric_analytic(model, p).components
            gn = metric_numeric(model.density, p, quad, model.domain).components
            err = float(np.max(np.abs(gn - ga)) / np.max(np.abs(ga)))
            rows.append(np.concatenate([p, [err]]))
    header = [f"theta_{k + 1}" for k in range(pts.shape[1])] + ["rel_err"]
    with _Stage("write"):
        rep.files.append(write_csv(header, rows, out_dir / f"{sc.id}_metric.csv"))
    worst = max(r[-1] for r in rows)
    rep.results["max_rel_err"] = worst
    if "max_rel_err" in sc.expect:
        rep.assertions.append(_upper("max_rel_err", worst, sc.expect["max_rel_err"]))


def _path_checks(sc: Scenario, model, path, rep: RunReport):
    drift = geo.speed_drift(model, path) if model.affine else float("nan")
    rep.results["speed_drift"] = drift
    rep.results["truncated"] = path.truncated
    rep.results["theta_end"] = path.theta[-1] if path.tau[-1] != 0 else path.theta[0]
    if "max_speed_drift" in sc.expect:
        rep.assertions.append(_upper("max_speed_drift", drift, sc.expect["max_speed_drift"]))


def _run_ivp(sc: Scenario, model, out_dir: Path, rep: RunReport):
    s = sc.settings
    with _Stage("integrate"):
        path = geo.integrate_ivp(model, np.array(s["theta0"]), np.array(s["v0"]), s["tau_max"], tol=s["tol"])
    _path_checks(sc, model, path, rep)
    end = path.theta_at(s["tau_max"]) if not path.truncated else path.theta[-1]
    rep.results["theta_end"] = end
    if "theta_end" in sc.expect:
        err = float(np.max(np.abs(end - np.array(sc.expect["theta_end"]))))
        rep.assertions.append(_upper("theta_end_abs_err", err, sc.expect["theta_end_tol"]))
    tau = None if s["samples"] is None else np.linspace(*sorted((0.0, path.tau[-1] if s["tau_max"] > 0 else path.tau[0])), s["samples"])
    with _Stage("write"):
        rep.files.append(write_path_csv(path, out_dir / f"{sc.id}_path.csv", tau))


def _run_bvp(sc: Scenario, model, out_dir: Path, rep: RunReport):
    s = sc.settings
    bp = geo.BoundaryProblem(np.array(s["theta_initial"]), np.array(s["theta_final"]), s["span"])
    guess = None if s["v_guess"] is None else np.array(s["v_guess"])
    with _Stage("shoot"):
        path = geo.solve_bvp(model, bp, tol=s["tol"], v_guess=guess)
    _path_checks(sc, model, path, rep)
    v0 = path.velocity[0]
    rep.results["v0"] = v0
    if "v0" in sc.expect:
        err = float(np.max(np.abs(v0 - np.array(sc.expect["v0"]))))
        rep.assertions.append(_upper("v0_abs_err", err, sc.expect["v0_tol"]))
    tau = None if s["samples"] is None else np.linspace(0.0, s["span"], s["samples"])
    with _Stage("write"):
        rep.files.append(write_path_csv(path, out_dir / f"{sc.id}_path.csv", tau))


def closed_form_series(name: str, params: dict, tau: np.ndarray, sc: Scenario) -> tuple[str, np.ndarray]:
    """Closed-form comparison values: returns the trace quantity compared and the values."""
    if name == "spin_integrable_exact":
        th, v = np.array(sc.settings["theta0"]), np.array(sc.settings["v0"])
        rates = np.abs(v / th)  # log-coordinate rates of the exponential geodesics
        return "igc", float(np.prod(rates)) * tau**2 / 3.0
    if name == "scattering_igc":
        return "igc", np.array([cf.scattering_igc_closed(t, params["rho"], params["lam"]) for t in tau])
    if name == "scattering_ige":
        return "ige", np.array([cf.scattering_ige_closed(t, params["rho"], params["lam"]) for t in tau])
    if name == "embedded_ige":
        return "ige", np.array([cf.embedded_ige_closed(t, params["l"], params["lam"], params["xi"], params["rho"]) for t in tau])
    raise ValueError(f"unknown closed form {name!r}")


def _run_trace(sc: Scenario, model, out_dir: Path, rep: RunReport):
    s = sc.settings
    tau = s["tau"]
    with _Stage("integrate"):
        path = geo.integrate_ivp(model, np.array(s["theta0"]), np.array(s["v0"]), s["s0"] + tau[-1], tol=s["tol"])
    with _Stage("complexity"):
        trace = cx.igc(model, path, tau, s["s0"], method=s["volume_method"])
    with _Stage("fit"):
        fit = cx.classify_growth(trace, s["tail"], s["quantity"])
        ks = cx.ks_analogue(trace, s["ks_window"] or s["tail"])
    rep.fit = fit
    rep.results.update(ks_analogue=ks, volume_method=trace.flags["volume_method"], orientation_reversal=trace.flags["orientation_reversal"])
    comparison = None
    if sc.compare is not None:
        with _Stage("compare"):
            q, closed = closed_form_series(sc.compare["closed_form"], sc.compare.get("params", {}), tau, sc)
            numeric = trace.series(q)
            diff = np.abs(numeric - closed)
            comparison = {"closed_form": sc.compare["closed_form"], "quantity": q, "tau": tau, "numeric": numeric, "closed": closed, "abs_diff": diff}
            rep.results["max_compare_diff"] = float(np.max(diff))
    with _Stage("write"):
        rep.files.append(write_trace_csv(trace, out_dir / f"{sc.id}_trace.csv"))
        text, data = fit_report(fit, comparison, {"ks_analogue": ks})
        (out_dir / f"{sc.id}_fit.txt").write_text(text)
        (out_dir / f"{sc.id}_fit.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        rep.files += [out_dir / f"{sc.id}_fit.txt", out_dir / f"{sc.id}_fit.json"]
    e = sc.expect
    if "regime" in e:
        rep.assertions.append(Assertion("regime", fit.regime, e["regime"], fit.regime == e["regime"]))
    if "min_r2" in e:
        rep.assertions.append(Assertion("r2", fit.r2, f">= {e['min_r2']}", fit.r2 >= e["min_r2"]))
    if "coefficient" in e:
        c = e["coefficient"]
        name = c.get("name")
        val = fit.coefficients.get(name, float("nan"))
        lo, hi = float(c.get("min", -math.inf)), float(c.get("max", math.inf))
        rep.assertions.append(Assertion(f"coefficient.{name}", val, f"[{lo}, {hi}]", bool(lo <= val <= hi)))
    if "ks_min" in e:
        rep.assertions.append(Assertion("ks_analogue", ks, f">= {e['ks_min']}", ks >= e["ks_min"]))
    if "ks_max" in e:
        rep.assertions.append(_upper("ks_analogue", ks, e["ks_max"]))
    if "max_compare_diff" in e:
        if comparison is None:
            rep.assertions.append(Assertion("max_compare_diff", None, "needs [compare]", False))
        else:
            rep.assertions.append(_upper("max_compare_diff", rep.results["max_compare_diff"], e["max_compare_diff"]))


def _run_ratios(sc: Scenario, model, out_dir: Path, rep: RunReport):
    grid = sc.settings["rho_grid"]
    for fam in sc.settings["families"]:
        fn = RATIO_FAMILIES[fam]
        with _Stage("ratios"):
            vals = np.array([fn(float(r)) for r in grid])
        with _Stage("write"):
            rep.files.append(write_csv(("rho", "value"), zip(grid, vals), out_dir / f"{sc.id}_{fam}.csv"))
        rep.results[fam] = vals
        mono = sc.expect.get("monotone")
        if mono:
            d = np.diff(vals)
            ok = bool(np.all(d > 0)) if mono == "increasing" else bool(np.all(d < 0))
            worst = float(d.min() if mono == "increasing" else -d.max()) if d.size else float("nan")
            rep.assertions.append(Assertion(f"{fam}.monotone", worst, f"{mono} (min step > 0)", ok))


def _mre_grid(sc: Scenario) -> mre.GridPrior:
    s = sc.settings
    if s["grid_csv"] is not None:
        p = Path(s["grid_csv"])
        if not p.is_absolute() and sc.base_dir is not None:
            p = sc.base_dir / p
        return mre.load_grid_prior(p)
    if s["gaussian"] is not None:
        g = dict(s["gaussian"])
        noise = float(g.pop("noise_sd", 1.0))
        obs = [float(x) for x in g.pop("observations", [0.0])]
        liks = [lambda th, x=x: np.exp(-0.5 * ((x - th) / noise) ** 2) / (noise * math.sqrt(2 * math.pi)) for x in obs]
        return mre.gaussian_grid_prior(likelihoods=liks, **g)
    lik = s["likelihood"]
    labels = tuple(lik)
    table = np.column_stack([np.array(lik[k], dtype=float) for k in labels])
    w = s["weights"] if s["weights"] is not None else np.ones(len(s["theta"]))
    return mre.GridPrior.normalized(s["theta"], w, s["prior"], table, labels)


def _run_mre(sc: Scenario, model, out_dir: Path, rep: RunReport):
    s = sc.settings
    with _Stage("grid"):
        grid = _mre_grid(sc)
    cons = None
    if s["constraint"] is not None:
        f = (lambda t: t) if s["constraint"]["f"] == "identity" else (lambda t: t * t)
        cons = mre.MomentConstraint(f, float(s["constraint"]["target"]))
    with _Stage("update"):
        sol = mre.mre_update(grid, s["observed"], cons)
    rep.results.update(beta=sol.beta, log_normalizer=sol.log_normalizer)
    if cons is not None:
        rep.results["moment_residual"] = abs(sol.moment - cons.target)
    with _Stage("write"):
        rows = zip(grid.theta, grid.weights, grid.prior, sol.posterior)
        rep.files.append(write_csv(("theta", "weight", "prior", "posterior"), rows, out_dir / f"{sc.id}_posterior.csv"))
    e = sc.expect
    if "beta" in e:
        rep.assertions.append(_upper("beta_abs_err", abs(sol.beta - e["beta"]), e["beta_tol"]))
    if "posterior" in e:
        ref = np.array(e["posterior"])
        err = float(np.max(np.abs(sol.posterior - ref))) if ref.size == sol.posterior.size else float("inf")
        rep.assertions.append(_upper("posterior_abs_err", err, e["posterior_tol"]))
    if "max_moment_residual" in e:
        res = rep.results.get("moment_residual", float("nan"))
        rep.assertions.append(Assertion("moment_residual", res, f"<= {e['max_moment_residual']}", bool(res <= e["max_moment_residual"])))


_RUNNERS = {
    "metric_check": _run_metric_check,
    "geodesic_ivp": _run_ivp,
    "geodesic_bvp": _run_bvp,
    "complexity_trace": _run_trace,
    "ratio_table": _run_ratios,
    "mre_update": _run_mre,
}
