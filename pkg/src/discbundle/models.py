"""Reference charts and line-bundle weights with known curvature."""

from __future__ import annotations

import itertools

import numpy as np

from .bundle import LineBundleWeight
from .errors import BadParams, UnknownModel
from .kahler import KahlerChart
from .polarized import PolarizedExpr, const, log, w, z

BASE_MARGIN = 0.05


def _norm2(m: int) -> PolarizedExpr:
    s = z(0) * w(0)
    for i in range(1, m):
        s = s + z(i) * w(i)
    return s


def _ball_domain(p) -> bool:
    return float(np.vdot(p, p).real) < 1.0


def _ball_sampler(m: int, radius: float = 1.0 - BASE_MARGIN):
    def sampler(rng):
        d = rng.normal(size=m) + 1j * rng.normal(size=m)
        d /= np.linalg.norm(d)
        return radius * rng.random() ** (1.0 / (2 * m)) * d

    return sampler


def _polydisc_domain(p) -> bool:
    return bool(np.all(np.abs(p) < 1.0))


def _polydisc_sampler(m: int, radius: float = 1.0 - BASE_MARGIN):
    def sampler(rng):
        r = radius * np.sqrt(rng.random(size=m))
        return r * np.exp(2j * np.pi * rng.random(size=m))

    return sampler


def _dim(m, lo=1, hi=6) -> int:
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or not lo <= m <= hi:
        raise BadParams(f"dimension must be an integer in [{lo}, {hi}], got {m!r}")
    return int(m)


def _positive(c, what="scale") -> float:
    try:
        c = float(c)
    except (TypeError, ValueError):
        raise BadParams(f"{what} must be a number, got {c!r}") from None
    if not c > 0 or not np.isfinite(c):
        raise BadParams(f"{what} must be positive, got {c}")
    return c


def complex_hyperbolic(m: int = 1, scale: float = 1.0) -> KahlerChart:
    """Unit ball with potential ``-scale * log(1 - |z|^2)``; HSC is ``-2 / scale``."""
    m, c = _dim(m), _positive(scale)
    pot = -log(1 - _norm2(m))
    if c != 1.0:
        pot = c * pot
    k = -2.0 / c
    return KahlerChart(m, pot, _ball_domain, _ball_sampler(m), f"complex_hyperbolic({m},{c:g})", (k, k))


def g_omega(m: int = 1) -> KahlerChart:
    """Complex hyperbolic metric normalized to HSC ``-1``."""
    chart = complex_hyperbolic(m, 2.0)
    return KahlerChart(chart.m, chart.potential, chart.domain, chart.sampler, f"g_omega({m})", (-1.0, -1.0))


def poincare_disc() -> KahlerChart:
    """Disc with Gaussian curvature ``-1`` (potential ``-2 log(1 - |z|^2)``)."""
    chart = complex_hyperbolic(1, 2.0)
    return KahlerChart(1, chart.potential, chart.domain, chart.sampler, "poincare_disc", (-1.0, -1.0))


def flat(m: int = 1) -> KahlerChart:
    m = _dim(m)
    return KahlerChart(m, _norm2(m), lambda p: True, _ball_sampler(m), f"flat({m})", (0.0, 0.0))


def point() -> KahlerChart:
    """Zero-dimensional base; bundles over it are balls."""
    return KahlerChart(0, const(0), lambda p: True, lambda rng: np.zeros(0, dtype=complex), "point")


def polydisc_like(m: int = 2, scale: float = 1.0) -> KahlerChart:
    """Product of discs, potential ``-scale * sum log(1 - |z_i|^2)``.

    Holomorphic sectional curvature ranges over ``[-2/scale, -2/(scale m)]``.
    """
    m, c = _dim(m), _positive(scale)
    pot = -log(1 - z(0) * w(0))
    for i in range(1, m):
        pot = pot + (-log(1 - z(i) * w(i)))
    if c != 1.0:
        pot = c * pot
    return KahlerChart(
        m, pot, _polydisc_domain, _polydisc_sampler(m), f"polydisc_like({m},{c:g})", (-2.0 / c, -2.0 / (c * m))
    )


def _monomial(exps, var) -> PolarizedExpr | None:
    out = None
    for i, e in enumerate(exps):
        if e:
            f = var(i) if e == 1 else var(i) ** e
            out = f if out is None else out * f
    return out


def perturbed_ball(m: int = 1, eps: float = 0.03, seed: int = 0) -> KahlerChart:
    """Ball potential plus ``eps * Re P(z, zbar)`` with a seeded random ``P``.

    ``P`` has total degree <= 4 and only mixed monomials ``z^a zbar^b`` with
    ``|a|, |b| >= 1``.  Coefficients are scaled so the perturbation's complex
    Hessian has norm at most ``10 eps`` on the unit ball, which keeps the
    metric positive definite for ``eps <= 0.05``.
    """
    m = _dim(m)
    try:
        eps = float(eps)
    except (TypeError, ValueError):
        raise BadParams(f"eps must be a number, got {eps!r}") from None
    if not 0.0 <= eps <= 0.05:
        raise BadParams(f"eps must lie in [0, 0.05], got {eps}")
    rng = np.random.default_rng([int(seed), m])
    monos = [
        e
        for d in range(1, 4)
        for e in itertools.product(range(d + 1), repeat=m)
        if sum(e) == d
    ]
    pairs = [(a, b) for a in monos for b in monos if sum(a) + sum(b) <= 4 and a <= b]
    coeffs = []
    for a, b in pairs:
        c = rng.uniform(-1, 1) + (1j * rng.uniform(-1, 1) if a != b else 0.0)
        coeffs.append(c)
    bound = sum((1 if a == b else 2) * abs(c) * sum(a) * sum(b) for (a, b), c in zip(pairs, coeffs))
    norm = 10.0 / bound
    pert = None
    for (a, b), c in zip(pairs, coeffs):
        c = c * norm
        term = (c.real if a == b else c) * (_monomial(a, z) * _monomial(b, w))
        if a != b:
            term = term + np.conj(c) * (_monomial(b, z) * _monomial(a, w))
        pert = term if pert is None else pert + term
    pot = -log(1 - _norm2(m))
    if eps:
        pot = pot + eps * pert
    return KahlerChart(m, pot, _ball_domain, _ball_sampler(m), f"perturbed_ball({m},{eps:g},{seed})")


def flat_weight(m: int = 1) -> LineBundleWeight:
    """Weight ``h = exp(-|z|^2)`` over the flat chart."""
    return LineBundleWeight(flat(m))


_CHARTS = {
    "complex_hyperbolic": complex_hyperbolic,
    "flat": flat,
    "g_omega": g_omega,
    "poincare_disc": poincare_disc,
    "perturbed_ball": perturbed_ball,
    "polydisc_like": polydisc_like,
    "point": point,
}

_WEIGHTS = {"flat_weight": flat_weight}

CATALOG = tuple(sorted(list(_CHARTS) + list(_WEIGHTS)))


def get_model(name: str, **params):
    """Look up a catalog entry.

    Chart names return a :class:`KahlerChart`; ``flat_weight`` returns a
    :class:`LineBundleWeight`.  The special name ``point`` returns the weight
    over the zero-dimensional base, since it only makes sense as a bundle base.
    """
    if name == "point":
        if params:
            raise BadParams("point takes no parameters")
        return LineBundleWeight(point())
    if name in _WEIGHTS:
        factory = _WEIGHTS[name]
    elif name in _CHARTS:
        factory = _CHARTS[name]
    else:
        raise UnknownModel(f"unknown model {name!r}; known: {', '.join(CATALOG)}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise BadParams(f"bad parameters for {name}: {exc}") from None


def weight_for(obj) -> LineBundleWeight:
    """Weight ``exp(-phi)`` for a chart, or the weight itself."""
    return obj if isinstance(obj, LineBundleWeight) else LineBundleWeight(obj)
