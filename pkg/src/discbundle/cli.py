"""Batch front end: ``discbundle {curvature,pinch,verify,models} --config PATH``.

The configuration is a flat text file of ``key = value`` lines with dotted
keys; ``#`` starts a comment.  Recognized keys::

    model.name        catalog name (default complex_hyperbolic)
    model.<param>     constructor parameter, e.g. model.m, model.scale, model.eps
    bundle.kind       disc | ball | iterated | calabi | none (default disc)
    bundle.k          fiber rank, 1..3 (default 1)
    bundle.profile    Calabi profile in prefix form over z1, for kind calabi
    samples           number of sample points (default 20)
    seed              64-bit unsigned integer (default 0)
    tolerance.<id>    override a check tolerance
    output.path       report destination (default stdout)
    output.format     json | csv (default json)
    pinch.kind        holomorphic | sectional | bisectional | ricci
    pinch.starts      random starts per point (default 64)
    pinch.sampler     uniform | log, fiber-radius law for bundles (default log)

Exit status is 0 when every gating check passes, 1 when one fails, 2 for
configuration errors and 3 for engine errors.  Each failure prints one
``key=value`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bundle import (
    STANDARD_PROFILE,
    BundleChart,
    CalabiProfile,
    ball_bundle_chart,
    calibrate_sectional_scale,
    closed_form_det,
    closed_form_metric,
    disc_bundle_chart,
    domination_residual,
    fiber_ray_length,
    fiber_sampler,
    general_calabi_chart,
    hsc_formula_residual,
    iterated_chart,
    restriction_residual,
    ricci_identity_residual,
    sectional_formula_residual,
    sectional_identity_residual,
)
from .errors import ConfigError, KahlerError, ProfileInadmissible
from .kahler import KahlerChart, RealTwoPlane, curvature_at, metric_at, ricci_ratio_range
from .models import CATALOG, complex_hyperbolic, get_model, weight_for
from .pinch import KINDS, estimate_bounds
from .polarized import parse

COMMANDS = ("curvature", "pinch", "verify", "models")
BUNDLE_KINDS = ("disc", "ball", "iterated", "calabi", "none")
MAX_DIM = 6


@dataclass(frozen=True)
class CheckSpec:
    id: str
    anchor: str
    tolerance: float
    gating: bool = True


CHECKS = (
    CheckSpec("curvature-symmetry", "R_{i jbar k lbar} = conj R_{j ibar l kbar} = R_{k jbar i lbar}", 1e-9),
    CheckSpec("restriction", "omega_D = (sqrt(-1)/h) dv ^ dvbar + pi^*(omega_M) on M", 1e-12),
    CheckSpec("domination", "g_D >= pi^*(g_M)", 1e-12),
    CheckSpec("ricci-identity", "Ric(g_D) = -(m+2) g_D + (m+1) g_M + Ric(g_M)", 1e-8),
    CheckSpec("determinant", "det g_D = h^{m+1}/(h-|v|^2)^{m+2} det((-log h)_{j kbar})", 1e-10),
    CheckSpec("closed-form-metric", "g_D = (-(h-|v|^2) h_{j kbar} + h_j h_kbar)/(h-|v|^2)^2", 1e-10),
    CheckSpec("hsc-formula", "Theta_D(U) = -2 + |X|_M^4/((1-|v|^2)|U|_D^4) (2 + Theta_M(X))", 1e-8),
    CheckSpec(
        "sectional-formula",
        "kappa_D = -2 + 2(-kappa_Omega + kappa_M/2) |x^y|_M^2/(1-|v|^2)",
        1e-8,
        gating=False,
    ),
    CheckSpec(
        "sectional-identity",
        "kappa_D = -(1+3cos^2 alpha_D)/2 + 2(-kappa_Omega + kappa_M/2) |x^y|_M^2/((1-|v|^2)|mu^nu|_D^2)",
        1e-8,
    ),
    CheckSpec("polarization", "R(x,y,y,x) via Q(X+Y), Q(X-Y), Q(X+iY), Q(X-iY), Q(X), Q(Y)", 1e-9),
    CheckSpec("ball-iteration", "D(L_k^*) = B(E_k^*)", 1e-10),
    CheckSpec("fiber-ray", "g_M complete implies g_D complete", 1e-10),
    CheckSpec("calabi-admissibility", "u'(x) > 0 and (x u'(x))' > 0 in [0, 1)", 1e-12),
    CheckSpec("hsc-containment", "min{-2, C_1} <= Theta_D <= max{-2, C_2}", 1e-3),
)
_CHECK_INDEX = {c.id: c for c in CHECKS}


def list_checks() -> list[dict]:
    """Check ids with their anchor strings, in report order."""
    return [{"id": c.id, "anchor": c.anchor} for c in CHECKS]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    command: str
    model_name: str = "complex_hyperbolic"
    model_params: tuple = ()
    bundle_kind: str = "disc"
    k: int = 1
    profile: str | None = None
    samples: int = 20
    seed: int = 0
    tolerances: tuple = ()
    output_path: str | None = None
    output_format: str = "json"
    pinch_kind: str = "holomorphic"
    pinch_starts: int = 64
    pinch_sampler: str = "log"

    def tolerance(self, check_id: str) -> float:
        return dict(self.tolerances).get(check_id, _CHECK_INDEX[check_id].tolerance)

    def echo(self) -> dict:
        out = {
            "command": self.command,
            "model.name": self.model_name,
            "bundle.kind": self.bundle_kind,
            "bundle.k": self.k,
            "samples": self.samples,
            "seed": self.seed,
            "output.format": self.output_format,
        }
        out.update({f"model.{k}": v for k, v in self.model_params})
        out.update({f"tolerance.{k}": v for k, v in self.tolerances})
        if self.profile is not None:
            out["bundle.profile"] = self.profile
        if self.command == "pinch":
            out.update({"pinch.kind": self.pinch_kind, "pinch.starts": self.pinch_starts, "pinch.sampler": self.pinch_sampler})
        return out


def _number(key: str, text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def parse_config_text(text: str) -> dict:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or key.count(".") > 1:
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def build_config(entries: dict, command: str, seed=None, samples=None, output=None, fmt=None) -> RunConfig:
    """Validate raw entries plus command-line overrides into a :class:`RunConfig`."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    kw = {"command": command}
    params, tols = {}, {}
    for key, value in entries.items():
        if key == "command":
            if value != command:
                raise ConfigError(f"config is for command {value!r}, invoked as {command!r}")
        elif key == "model.name":
            kw["model_name"] = value
        elif key.startswith("model."):
            params[key[6:]] = _number(key, value)
        elif key == "bundle.kind":
            kw["bundle_kind"] = value
        elif key == "bundle.k":
            kw["k"] = _int(key, value)
        elif key == "bundle.profile":
            kw["profile"] = value
        elif key == "samples":
            kw["samples"] = _int(key, value)
        elif key == "seed":
            kw["seed"] = _int(key, value)
        elif key.startswith("tolerance."):
            cid = key[10:]
            if cid not in _CHECK_INDEX:
                raise ConfigError(f"{key}: unknown check id")
            tols[cid] = float(_number(key, value))
        elif key == "output.path":
            kw["output_path"] = value
        elif key == "output.format":
            kw["output_format"] = value
        elif key == "pinch.kind":
            kw["pinch_kind"] = value
        elif key == "pinch.starts":
            kw["pinch_starts"] = _int(key, value)
        elif key == "pinch.sampler":
            kw["pinch_sampler"] = value
        else:
            raise ConfigError(f"unknown key {key!r}")
    for name, val in (("seed", seed), ("samples", samples), ("output_path", output), ("output_format", fmt)):
        if val is not None:
            kw[name] = val
    kw["model_params"] = tuple(sorted(params.items()))
    kw["tolerances"] = tuple(sorted(tols.items()))
    cfg = RunConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.samples < 1:
        raise ConfigError(f"samples must be >= 1, got {cfg.samples}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {cfg.seed}")
    if cfg.bundle_kind not in BUNDLE_KINDS:
        raise ConfigError(f"bundle.kind must be one of {', '.join(BUNDLE_KINDS)}")
    if not 1 <= cfg.k <= 3:
        raise ConfigError(f"bundle.k must lie in [1, 3], got {cfg.k}")
    if cfg.bundle_kind in ("disc", "calabi") and cfg.k != 1:
        raise ConfigError(f"bundle.kind {cfg.bundle_kind} has rank 1, got k = {cfg.k}")
    if cfg.bundle_kind == "calabi" and cfg.profile is None:
        raise ConfigError("bundle.kind calabi needs bundle.profile")
    for cid, tol in cfg.tolerances:
        if not tol > 0:
            raise ConfigError(f"tolerance.{cid} must be positive, got {tol}")
    if cfg.output_format not in ("json", "csv"):
        raise ConfigError(f"output.format must be json or csv, got {cfg.output_format!r}")
    if cfg.pinch_kind not in KINDS:
        raise ConfigError(f"pinch.kind must be one of {', '.join(KINDS)}")
    if cfg.pinch_starts < 1:
        raise ConfigError(f"pinch.starts must be >= 1, got {cfg.pinch_starts}")
    if cfg.pinch_sampler not in ("uniform", "log"):
        raise ConfigError("pinch.sampler must be uniform or log")


def load_config(path: str, command: str, **overrides) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    return build_config(parse_config_text(text), command, **overrides)


def build_target(cfg: RunConfig):
    """The configured chart: a :class:`BundleChart`, or the base chart for kind ``none``."""
    try:
        obj = get_model(cfg.model_name, **dict(cfg.model_params))
    except KahlerError as exc:
        raise ConfigError(str(exc)) from None
    weight = weight_for(obj)
    base = weight.base
    k = 0 if cfg.bundle_kind == "none" else cfg.k
    if base.m + k > MAX_DIM:
        raise ConfigError(f"total dimension {base.m + k} exceeds {MAX_DIM}")
    if cfg.bundle_kind == "none":
        if base.m == 0:
            raise ConfigError("the point model needs a bundle")
        return base
    if cfg.bundle_kind == "disc":
        return disc_bundle_chart(weight)
    if cfg.bundle_kind == "ball":
        return ball_bundle_chart(weight, cfg.k)
    if cfg.bundle_kind == "iterated":
        return iterated_chart(weight, cfg.k)
    try:
        profile = CalabiProfile(parse(cfg.profile), name=cfg.profile)
    except ValueError as exc:
        if isinstance(exc, KahlerError):
            raise
        raise ConfigError(f"bundle.profile: {exc}") from None
    return general_calabi_chart(weight, profile)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class CheckRecord:
    id: str
    anchor: str
    samples: int
    max_residual: float
    tolerance: float
    gating: bool
    witness: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual < self.tolerance)

    def as_dict(self) -> dict:
        out = {
            "id": self.id,
            "anchor": self.anchor,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "gating": self.gating,
            "witness": self.witness,
        }
        out.update(self.extra)
        return out


@dataclass
class Report:
    config: RunConfig
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    @property
    def failed(self) -> list:
        return [c.id for c in self.checks if c.gating and not c.passed]

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def summary(self) -> dict:
        return {
            "checks": len(self.checks),
            "passed": sum(c.passed for c in self.checks),
            "failed_gating": self.failed,
            "status": "fail" if self.failed else "pass",
        }

    def as_dict(self) -> dict:
        out = {
            "engine": "discbundle",
            "engine_version": __version__,
            "seed": self.config.seed,
            "config": self.config.echo(),
            "summary": self.summary(),
            "checks": [c.as_dict() for c in self.checks],
        }
        if self.results:
            out["results"] = self.results
        if self.rows:
            out["rows"] = self.rows
        return out


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else json.dumps(str(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(report: Report) -> str:
    """Sorted keys, floats with 17 significant digits, trailing newline."""
    return _encode(report.as_dict()) + "\n"


def _csv_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return "" if v is None else str(v)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    if report.config.command == "curvature":
        width = max((len(r["coordinates"]) for r in report.rows), default=0)
        wwidth = max((len(r["witness"]) for r in report.rows), default=0)
        out.writerow(
            ["point_index"]
            + [f"coord{i}_{part}" for i in range(1, width + 1) for part in ("re", "im")]
            + ["kind", "value"]
            + [f"witness{i}_{part}" for i in range(1, wwidth + 1) for part in ("re", "im")]
        )
        for r in report.rows:
            coords = [c for z in r["coordinates"] for c in z]
            wit = [c for z in r["witness"] for c in z]
            wit += [None] * (2 * wwidth - len(wit))
            out.writerow([_csv_value(v) for v in [r["point_index"], *coords, r["kind"], r["value"], *wit]])
    else:
        out.writerow(["id", "anchor", "samples", "max_residual", "tolerance", "passed", "gating"])
        for c in report.checks:
            out.writerow(
                [_csv_value(v) for v in (c.id, c.anchor, c.samples, c.max_residual, c.tolerance, c.passed, c.gating)]
            )
    return buf.getvalue()


def render(report: Report) -> str:
    return to_csv(report) if report.config.output_format == "csv" else to_json(report)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _pairs(v) -> list:
    return [[float(c.real), float(c.imag)] for c in np.asarray(v, dtype=complex).ravel()]


def _points(chart: KahlerChart, cfg: RunConfig) -> list:
    return [chart.sample(np.random.default_rng([cfg.seed, 0, i])) for i in range(cfg.samples)]


def _directions(cfg: RunConfig, i: int, n: int, count: int = 1) -> list:
    rng = np.random.default_rng([cfg.seed, 2, i])
    return [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(count)]


class _Tracker:
    """Running maximum with the first index attaining it."""

    def __init__(self):
        self.value, self.index, self.point, self.count = 0.0, None, None, 0

    def add(self, value: float, index: int, point) -> None:
        value = float(value)
        self.count += 1
        if self.index is None or value > self.value or math.isnan(value):
            self.value, self.index, self.point = value, index, point

    def record(self, spec: CheckSpec, cfg: RunConfig, **extra) -> CheckRecord:
        witness = None if self.index is None else {"sample": self.index, "point": _pairs(self.point)}
        return CheckRecord(spec.id, spec.anchor, self.count, self.value, cfg.tolerance(spec.id), spec.gating, witness, extra)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def _verify(cfg: RunConfig, target) -> Report:
    report = Report(cfg)
    is_bundle = isinstance(target, BundleChart)
    chart = target.total if is_bundle else target
    pts = _points(chart, cfg)
    n = chart.m
    disc = is_bundle and target.kind == "disc"

    def run(check_id, fn, points=pts, **extra):
        t = _Tracker()
        for i, p in enumerate(points):
            t.add(fn(i, p), i, p)
        report.checks.append(t.record(_CHECK_INDEX[check_id], cfg, **extra))

    def symmetry(i, p):
        t = curvature_at(chart, p)
        scale = max(float(np.max(np.abs(t.components))), 1.0)
        return max(t.symmetry_residuals().values()) / scale

    run("curvature-symmetry", symmetry)

    if is_bundle and target.kind != "calabi":
        run("restriction", lambda i, p: restriction_residual(target, target.split(p)[1]))
    if is_bundle:
        run("domination", lambda i, p: max(0.0, -domination_residual(target, p)))
    if disc:
        w = target.weight
        run("ricci-identity", lambda i, p: ricci_identity_residual(target, p))

        def det(i, p):
            v, zpt = target.split(p)
            direct = float(np.linalg.det(metric_at(chart, p)).real)
            return abs(closed_form_det(w, zpt, v) / direct - 1.0)

        run("determinant", det)

        def cfm(i, p):
            v, zpt = target.split(p)
            return _rel(closed_form_metric(w, zpt, v), metric_at(chart, p))

        run("closed-form-metric", cfm)
        run("hsc-formula", lambda i, p: hsc_formula_residual(target, p, _directions(cfg, i, n)[0]))

        def plane(i):
            X, Y = _directions(cfg, i, n, 2)
            return RealTwoPlane(X, Y)

        ref = disc_bundle_chart(weight_for(complex_hyperbolic(max(target.base.m, 1))))
        ref_pts = _points(ref.total, cfg)
        rn = ref.total.m
        cal = [(p, RealTwoPlane(*_directions(cfg, i, rn, 2))) for i, p in enumerate(ref_pts)]
        s, _ = calibrate_sectional_scale(ref, cal)
        run("sectional-formula", lambda i, p: sectional_formula_residual(target, p, plane(i), s), calibrated_scale=s)
        run("sectional-identity", lambda i, p: sectional_identity_residual(target, p, plane(i)))

    def polar(i, p):
        t = curvature_at(chart, p)
        X, Y = _directions(cfg, i, n, 2)
        a, b = t.polarized_sum(X, Y), t.direct_contraction(X, Y)
        return abs(a - b) / max(abs(b), t.norm2(X) * t.norm2(Y) * 1e-3, 1e-300)

    run("polarization", polar)

    if is_bundle and target.kind != "calabi":
        w = target.weight
        k = max(2, target.fiber_rank) if target.base.m + 2 <= MAX_DIM else 1
        direct = ball_bundle_chart(w, k) if k > 1 else disc_bundle_chart(w)
        it = iterated_chart(w, k)
        ipts = _points(direct.total, cfg)
        run("ball-iteration", lambda i, p: float(np.max(np.abs(metric_at(it.total, p) - metric_at(direct.total, p)))), ipts, rank=k)

        bpts = [target.split(p)[1] for p in pts[: min(len(pts), 3)]]
        run(
            "fiber-ray",
            lambda i, zpt: abs(fiber_ray_length(math.tanh(1.0), target, zpt) - 1.0),
            bpts,
        )
    if is_bundle and target.kind == "calabi":
        prof = target.profile
        xs = np.linspace(0.0, 0.95, 20)

        def adm(i, x):
            _, d1, d2 = prof.derivatives(float(x))
            return max(0.0, -d1, -(d1 + x * d2))

        run("calabi-admissibility", lambda i, x: adm(i, x), xs)
    return report


def _pinch(cfg: RunConfig, target) -> Report:
    report = Report(cfg)
    is_bundle = isinstance(target, BundleChart)
    kw = {"points": cfg.samples, "seed": cfg.seed}
    if cfg.pinch_kind != "ricci":
        kw["starts"] = cfg.pinch_starts
    if is_bundle and cfg.pinch_sampler == "log":
        kw["sampler"] = fiber_sampler(target)
    pb = estimate_bounds(target, cfg.pinch_kind, **kw)

    def wit(w):
        return {
            "value": w.value,
            "sample": w.point_index,
            "start": w.start_index,
            "point": _pairs(w.point),
            "directions": [_pairs(d) for d in w.directions],
        }

    report.results = {
        "kind": pb.kind,
        "lower": pb.lower,
        "upper": pb.upper,
        "A": pb.A,
        "delta": pb.delta,
        "witnesses": {k: wit(v) for k, v in sorted(pb.witnesses.items())},
    }
    base = target.base if is_bundle else target
    if cfg.pinch_kind == "holomorphic" and base.hsc_range is not None and (not is_bundle or target.kind == "disc"):
        c1, c2 = base.hsc_range
        lo, hi = (min(-2.0, c1), max(-2.0, c2)) if is_bundle else (c1, c2)
        resid = max(0.0, lo - pb.lower, pb.upper - hi)
        spec = _CHECK_INDEX["hsc-containment"]
        report.checks.append(
            CheckRecord(spec.id, spec.anchor, cfg.samples, resid, cfg.tolerance(spec.id), True, None, {"interval": [lo, hi]})
        )
    return report


def _curvature(cfg: RunConfig, target) -> Report:
    report = Report(cfg)
    chart = target.total if isinstance(target, BundleChart) else target
    n = chart.m
    for i, p in enumerate(_points(chart, cfg)):
        t = curvature_at(chart, p)
        X, Y = _directions(cfg, i, n, 2)
        coords = _pairs(p)
        lo, hi = ricci_ratio_range(chart, p)
        entries = [
            ("holomorphic", t.hsc(X), [X]),
            ("bisectional", t.bisectional(X, Y), [X, Y]),
            ("sectional", t.sectional(RealTwoPlane(X, Y)), [X, Y]),
            ("ricci_min", lo, []),
            ("ricci_max", hi, []),
        ]
        for kind, value, wit in entries:
            report.rows.append(
                {
                    "point_index": i,
                    "coordinates": coords,
                    "kind": kind,
                    "value": float(value),
                    "witness": [c for d in wit for c in _pairs(d)],
                }
            )
    return report


def _models(cfg: RunConfig) -> Report:
    report = Report(cfg)
    entries = []
    for name in CATALOG:
        obj = get_model(name)
        chart = weight_for(obj).base if not isinstance(obj, KahlerChart) else obj
        entries.append({"name": name, "dimension": chart.m, "hsc_range": list(chart.hsc_range) if chart.hsc_range else None})
    report.results = {"models": entries, "checks": list_checks()}
    return report


def run(cfg: RunConfig) -> Report:
    """Execute ``cfg.command`` and return the report (nothing is written)."""
    if cfg.command == "models":
        return _models(cfg)
    target = build_target(cfg)
    if cfg.command == "verify":
        return _verify(cfg, target)
    if cfg.command == "pinch":
        return _pinch(cfg, target)
    return _curvature(cfg, target)


def _reason(text: str) -> str:
    return json.dumps(" ".join(str(text).split()))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="discbundle", description="Curvature of disc bundles over Kähler charts.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, metavar="PATH")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--output", metavar="PATH")
    parser.add_argument("--format", choices=("json", "csv"))
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, seed=args.seed, samples=args.samples, output=args.output, fmt=args.format)
        report = run(cfg)
        text = render(report)
    except ConfigError as exc:
        print(f"error=config reason={_reason(exc)}", file=sys.stderr)
        return 2
    except ProfileInadmissible as exc:
        print(f"error=config reason={_reason(exc)}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any engine failure maps to exit 3
        print(f"error=engine type={type(exc).__name__} reason={_reason(exc)}", file=sys.stderr)
        return 3
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error=engine type=OSError reason={_reason(exc.strerror)}", file=sys.stderr)
            return 3
    else:
        sys.stdout.write(text)
    if report.failed:
        print(f"error=check-failed checks={','.join(report.failed)}", file=sys.stderr)
    return report.exit_code
