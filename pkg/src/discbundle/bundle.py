"""Calabi-ansatz disc and ball bundles over a base chart.

Total-space coordinates put the fiber slots first, ``(v_1..v_k, z_1..z_m)``.
The fiber metric is always taken in the gauge ``h = exp(-phi)`` where ``phi``
is the base potential, so ``|v|^2_{h^{-1}} = |v|^2 exp(phi(z))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, OutOfRange, OutsideDisc, ProfileInadmissible, WeightNotPositive
from .kahler import (
    CurvatureTensor,
    KahlerChart,
    RealTwoPlane,
    curvature_at,
    metric_at,
    ricci_form_at,
)
from .polarized import PolarizedExpr, diagonal, eval_jet, evaluate, log, w, z

FIBER_MARGIN = 0.95


@dataclass(frozen=True)
class LineBundleWeight:
    """Hermitian weight ``h = exp(-phi)`` on a line bundle over ``base``."""

    base: KahlerChart
    phi: PolarizedExpr | None = None

    def __post_init__(self):
        if self.phi is None:
            object.__setattr__(self, "phi", self.base.potential)

    @property
    def h(self) -> PolarizedExpr:
        return (-self.phi).exp()

    def h_at(self, zpt) -> float:
        return evaluate(self.h, diagonal(zpt)).real

    def curvature_residual(self, zpt) -> float:
        """``max |(-ddbar log h) - g_M|`` at one base point."""
        jet = eval_jet(self.h, diagonal(zpt), 2)
        h = jet.value
        if abs(h.imag) > 1e-12 * max(1.0, abs(h)) or h.real <= 0:
            raise WeightNotPositive(f"h = {h} is not real positive at {zpt}")
        hz, hw, hzw = jet.partials(1, 0), jet.partials(0, 1), jet.partials(1, 1)
        curv = (np.outer(hz, hw) - h * hzw) / h**2
        if self.base.m == 0:
            return 0.0
        return float(np.max(np.abs(curv - metric_at(self.base, zpt))))

    def check(self, points, tol: float = 1e-10) -> float:
        worst = 0.0
        for zpt in points:
            worst = max(worst, self.curvature_residual(zpt))
        if worst >= tol:
            raise WeightNotPositive(f"-ddbar log h differs from the base metric by {worst:.3e}")
        return worst


@dataclass(frozen=True)
class CalabiProfile:
    """Profile ``u(x)`` written as an expression in the single slot ``z1``."""

    u: PolarizedExpr
    name: str = ""

    def derivatives(self, x: float) -> tuple[float, float, float]:
        jet = eval_jet(self.u, [x, np.conj(x)], 2)
        return jet.value.real, jet.d(0).real, jet.d(0, 0).real

    def check(self, xs=None) -> None:
        """Raise :class:`ProfileInadmissible` unless ``u' > 0`` and ``(x u')' > 0``."""
        if xs is None:
            xs = np.linspace(0.0, FIBER_MARGIN, 20)
        for x in xs:
            _, d1, d2 = self.derivatives(float(x))
            if not d1 > 0:
                raise ProfileInadmissible(f"u'({x}) = {d1} is not positive", x=float(x))
            if not d1 + x * d2 > 0:
                raise ProfileInadmissible(f"(x u')'({x}) = {d1 + x * d2} is not positive", x=float(x))


STANDARD_PROFILE = CalabiProfile(-log(1 - z(0)), name="-log(1-x)")


@dataclass(frozen=True)
class BundleChart:
    """Total-space chart of a Calabi-ansatz bundle."""

    total: KahlerChart
    fiber_rank: int
    base: KahlerChart
    weight: LineBundleWeight
    profile: CalabiProfile | None = None
    kind: str = "disc"

    def split(self, point) -> tuple[np.ndarray, np.ndarray]:
        point = np.asarray(point, dtype=complex).ravel()
        return point[: self.fiber_rank], point[self.fiber_rank :]

    def fiber_norm2(self, point) -> float:
        """``x = sum |v_i|^2 exp(phi(z))``."""
        v, zpt = self.split(point)
        return float(np.vdot(v, v).real * np.exp(evaluate(self.weight.phi, diagonal(zpt)).real))

    def join(self, v, zpt) -> np.ndarray:
        return np.concatenate([np.atleast_1d(np.asarray(v, dtype=complex)), np.asarray(zpt, dtype=complex)])


def _fiber_sum(k: int, upto: int | None = None) -> PolarizedExpr:
    upto = k if upto is None else upto
    s = z(0) * w(0)
    for i in range(1, upto):
        s = s + z(i) * w(i)
    return s


def _make_domain(weight: LineBundleWeight, k: int):
    base = weight.base

    def domain(p):
        v, zpt = p[:k], p[k:]
        if not base.domain(zpt):
            return False
        try:
            phi = evaluate(weight.phi, diagonal(zpt)).real
        except DomainError:
            return False
        return float(np.vdot(v, v).real) * np.exp(phi) < 1.0

    return domain


def _make_sampler(weight: LineBundleWeight, k: int, margin: float = FIBER_MARGIN, law: str = "uniform", floor=1e-6):
    base = weight.base
    if base.sampler is None:
        return None
    if law not in ("uniform", "log"):
        raise ValueError(f"unknown fiber law {law!r}")

    def sampler(rng):
        zpt = base.sample(rng)
        bound = margin * np.exp(-evaluate(weight.phi, diagonal(zpt)).real)
        d = rng.normal(size=k) + 1j * rng.normal(size=k)
        d /= np.linalg.norm(d)
        u = rng.random()
        r2 = bound * (u ** (1.0 / k) if law == "uniform" else floor**u)
        return np.concatenate([np.sqrt(r2) * d, zpt])

    return sampler


def fiber_sampler(b: "BundleChart", law: str = "log", floor: float = 1e-6, margin: float = FIBER_MARGIN):
    """Sampler of bundle points with a chosen law for the fiber radius.

    ``law="uniform"`` is volume-uniform in the fiber ball (the chart default);
    ``law="log"`` draws ``|v|^2 e^phi / margin`` log-uniformly in
    ``[floor, 1]``, which resolves the zero section where several curvature
    bounds are approached.
    """
    return _make_sampler(b.weight, b.fiber_rank, margin, law, floor)


def _total_chart(weight, k, potential, name, kind, profile=None) -> BundleChart:
    base = weight.base
    total = KahlerChart(
        m=base.m + k,
        potential=potential,
        domain=_make_domain(weight, k),
        sampler=_make_sampler(weight, k),
        name=name,
    )
    return BundleChart(total, k, base, weight, profile, kind)


def _check_weight(weight: LineBundleWeight, npts: int = 3) -> None:
    base = weight.base
    if base.sampler is None:
        return
    rng = np.random.default_rng(12345)
    weight.check([base.sample(rng) for _ in range(npts)])


def _calabi_potential(weight: LineBundleWeight, u: CalabiProfile, k: int) -> PolarizedExpr:
    phi = weight.phi.shift(k)
    x = _fiber_sum(k) * phi.exp()
    return phi + u.u.substitute(lambda op, i: x if (op, i) == ("z", 0) else None)


def general_calabi_chart(weight: LineBundleWeight, u: CalabiProfile, xs=None) -> BundleChart:
    """Rank-one Calabi ansatz ``phi + u(|v|^2 exp(phi))``."""
    if u.u.nslots > 1 or any(n.op == "w" for n in u.u._walk()):
        raise ValueError("a Calabi profile must only use the slot z1")
    u.check(xs)
    _check_weight(weight)
    kind = "disc" if u.u == STANDARD_PROFILE.u else "calabi"
    return _total_chart(weight, 1, _calabi_potential(weight, u, 1), f"calabi[{u.name}]", kind, u)


def disc_bundle_chart(weight: LineBundleWeight) -> BundleChart:
    """Disc bundle ``D(L*)`` with potential ``phi - log(1 - |v|^2 exp(phi))``."""
    _check_weight(weight)
    name = f"disc({weight.base.name})"
    return _total_chart(weight, 1, _calabi_potential(weight, STANDARD_PROFILE, 1), name, "disc", STANDARD_PROFILE)


def ball_bundle_chart(weight: LineBundleWeight, k: int) -> BundleChart:
    """Ball bundle ``B(E_k*)``: potential ``phi - log(1 - sum |v_i|^2 exp(phi))``."""
    if k < 1:
        raise ValueError("fiber rank k must be >= 1")
    _check_weight(weight)
    kind = "disc" if k == 1 else "ball"
    name = f"ball{k}({weight.base.name})"
    return _total_chart(weight, k, _calabi_potential(weight, STANDARD_PROFILE, k), name, kind, STANDARD_PROFILE)


def iterated_chart(weight: LineBundleWeight, k: int) -> BundleChart:
    """``k``-fold iterated disc bundle with fiber weights ``h^{-1} (1 - |v'|^2)^{-1}``."""
    if k < 1:
        raise ValueError("fiber rank k must be >= 1")
    _check_weight(weight)
    phi = weight.phi.shift(k)
    e = phi.exp()
    psi = phi + (-log(1 - z(0) * w(0) * e))
    for j in range(1, k):
        x = z(j) * w(j) * e / (1 - _fiber_sum(k, j) * e)
        psi = psi + (-log(1 - x))
    kind = "disc" if k == 1 else "iterated"
    return _total_chart(weight, k, psi, f"iterated{k}({weight.base.name})", kind, STANDARD_PROFILE)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def _h_jet(weight, zpt):
    jet = eval_jet(weight.h, diagonal(zpt), 2)
    return jet.value.real, jet.partials(1, 0), jet.partials(0, 1), jet.partials(1, 1)


def closed_form_metric(weight: LineBundleWeight, zpt, v) -> np.ndarray:
    """Disc-bundle metric assembled from ``h, h_j, h_k̄, h_{j k̄}`` (fiber slot first)."""
    zpt = np.asarray(zpt, dtype=complex).ravel()
    v = complex(np.asarray(v).ravel()[0]) if np.ndim(v) else complex(v)
    h, hz, hw, hzw = _h_jet(weight, zpt)
    r = abs(v) ** 2
    if not r < h:
        raise OutsideDisc(f"|v|^2 / h = {r / h} is not below 1")
    m = zpt.size
    T = np.empty((m + 1, m + 1), dtype=complex)
    T[0, 0] = h
    T[0, 1:] = -hw * np.conj(v)
    T[1:, 0] = -hz * v
    T[1:, 1:] = -(h - r) * hzw + np.outer(hz, hw)
    return T / (h - r) ** 2


def closed_form_det(weight: LineBundleWeight, zpt, v) -> float:
    """``h^{m+1} / (h - |v|^2)^{m+2} det((-log h)_{j k̄})``."""
    zpt = np.asarray(zpt, dtype=complex).ravel()
    v = complex(np.asarray(v).ravel()[0]) if np.ndim(v) else complex(v)
    h, hz, hw, hzw = _h_jet(weight, zpt)
    r = abs(v) ** 2
    if not r < h:
        raise OutsideDisc(f"|v|^2 / h = {r / h} is not below 1")
    m = zpt.size
    gm = (np.outer(hz, hw) - h * hzw) / h**2
    det_m = np.linalg.det(gm).real if m else 1.0
    return float(h ** (m + 1) / (h - r) ** (m + 2) * det_m)


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------


def _pullback(b: BundleChart, mat: np.ndarray) -> np.ndarray:
    k, m = b.fiber_rank, b.base.m
    out = np.zeros((k + m, k + m), dtype=complex)
    out[k:, k:] = mat
    return out


def _base_metric(b: BundleChart, zpt) -> np.ndarray:
    return metric_at(b.base, zpt) if b.base.m else np.zeros((0, 0), dtype=complex)


def restriction_residual(b: BundleChart, zpt) -> float:
    """Max deviation of ``g_D`` on the zero section from ``diag(I / h, g_M)``."""
    zpt = np.asarray(zpt, dtype=complex)
    k = b.fiber_rank
    g = metric_at(b.total, b.join(np.zeros(k, dtype=complex), zpt))
    expect = _pullback(b, _base_metric(b, zpt))
    expect[:k, :k] = np.eye(k) / b.weight.h_at(zpt)
    return float(np.max(np.abs(g - expect)))


def domination_residual(b: BundleChart, point) -> float:
    """Smallest eigenvalue of ``g_D - pi^* g_M``."""
    _, zpt = b.split(point)
    diff = metric_at(b.total, point) - _pullback(b, _base_metric(b, zpt))
    return float(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))[0])


def _require_disc(b: BundleChart, what: str) -> None:
    if b.fiber_rank != 1 or b.kind != "disc":
        raise ValueError(f"{what} applies to the rank-one disc bundle only")


def ricci_identity_residual(b: BundleChart, point) -> float:
    """``max |Ric(g_D) + (m+2) g_D - (m+1) g_M - Ric(g_M)|`` (base terms pulled back)."""
    _require_disc(b, "the Ricci identity")
    m = b.base.m
    _, zpt = b.split(point)
    gd = metric_at(b.total, point)
    ric_d = ricci_form_at(b.total, point)
    if m:
        gm = _pullback(b, metric_at(b.base, zpt))
        ric_m = _pullback(b, ricci_form_at(b.base, zpt))
    else:
        gm = ric_m = np.zeros_like(gd)
    res = ric_d + (m + 2) * gd - (m + 1) * gm - ric_m
    return float(np.max(np.abs(res)))


def _base_tensor(b: BundleChart, zpt) -> CurvatureTensor | None:
    return curvature_at(b.base, zpt) if b.base.m else None


def hsc_formula_terms(b: BundleChart, point, U) -> tuple[float, float]:
    """Direct holomorphic sectional curvature and the fiber/base formula value."""
    _require_disc(b, "the holomorphic sectional curvature formula")
    U = np.asarray(U, dtype=complex).ravel()
    _, zpt = b.split(point)
    td = curvature_at(b.total, point)
    direct = td.hsc(U)
    X = U[1:]
    tm = _base_tensor(b, zpt)
    if tm is None or not np.any(X):
        return direct, -2.0
    x = b.fiber_norm2(point)
    ratio = tm.norm2(X) / td.norm2(U)
    return direct, -2.0 + ratio**2 * (2.0 + tm.hsc(X)) / (1.0 - x)


def hsc_formula_residual(b: BundleChart, point, U) -> float:
    direct, rhs = hsc_formula_terms(b, point, U)
    return abs(direct - rhs)


def _projected_terms(tm: CurvatureTensor | None, Xb, Yb):
    """``(kappa_M, kappa_Omega, |x ^ y|^2_M)`` of the projected plane, zeros if degenerate."""
    if tm is None:
        return 0.0, 0.0, 0.0
    w2 = tm.wedge2(Xb, Yb)
    scale = tm.real_inner(Xb, Xb) * tm.real_inner(Yb, Yb)
    if not scale > 0 or w2 <= 1e-14 * scale:
        return 0.0, 0.0, max(w2, 0.0)
    plane = RealTwoPlane(Xb, Yb)
    return tm.sectional(plane), -0.25 * (1.0 + 3.0 * tm.cos2_alpha(plane)), w2


def sectional_formula_terms(b: BundleChart, point, plane: RealTwoPlane, s: float = 1.0) -> tuple[float, float]:
    """Direct sectional curvature and the uncorrected fiber/base formula (constant -2 fiber term).

    The plane is orthonormalized in ``s * <., .>`` on the total space; the
    base wedge norm uses the same scaled inner product.
    """
    _require_disc(b, "the sectional curvature formula")
    _, zpt = b.split(point)
    td = curvature_at(b.total, point)
    direct = td.sectional(plane)
    Xh, Yh = td.orthonormal_plane(plane)
    Xh, Yh = Xh / np.sqrt(s), Yh / np.sqrt(s)
    kappa_m, kappa_o, w2 = _projected_terms(_base_tensor(b, zpt), Xh[1:], Yh[1:])
    x = b.fiber_norm2(point)
    rhs = -2.0 + 2.0 * (-kappa_o + 0.5 * kappa_m) * s**2 * w2 / (1.0 - x)
    return direct, rhs


def sectional_formula_residual(b: BundleChart, point, plane: RealTwoPlane, s: float = 1.0) -> float:
    direct, rhs = sectional_formula_terms(b, point, plane, s)
    return abs(direct - rhs)


def sectional_identity_terms(b: BundleChart, point, plane: RealTwoPlane) -> tuple[float, float]:
    """Direct sectional curvature and the exact fiber/base identity.

    ``kappa_D = -(1 + 3 cos^2 a_D)/2 + 2 (-kappa_Om + kappa_M/2) |x^y|_M^2 / ((1-x) |mu^nu|_D^2)``
    """
    _require_disc(b, "the sectional curvature identity")
    _, zpt = b.split(point)
    td = curvature_at(b.total, point)
    direct = td.sectional(plane)
    Xh, Yh = td.orthonormal_plane(plane)
    kappa_m, kappa_o, w2 = _projected_terms(_base_tensor(b, zpt), Xh[1:], Yh[1:])
    x = b.fiber_norm2(point)
    fiber_term = -0.5 * (1.0 + 3.0 * td.cos2_alpha(plane))
    return direct, fiber_term + 2.0 * (-kappa_o + 0.5 * kappa_m) * w2 / (1.0 - x)


def sectional_identity_residual(b: BundleChart, point, plane: RealTwoPlane) -> float:
    direct, rhs = sectional_identity_terms(b, point, plane)
    return abs(direct - rhs)


def calibrate_sectional_scale(b: BundleChart, samples, candidates=(1.0, 0.5, 2.0)) -> tuple[float, dict]:
    """Pick the inner-product factor with the smallest worst residual.

    ``samples`` is an iterable of ``(point, plane)``.  Ties keep the earlier
    candidate.  Returns the chosen factor and the worst residual per factor.
    """
    samples = list(samples)
    worst = {}
    for s in candidates:
        worst[s] = max(sectional_formula_residual(b, p, pl, s) for p, pl in samples)
    best = min(candidates, key=lambda s: worst[s])
    return best, worst


def fiber_ray_length(r: float, bundle: BundleChart | None = None, base_point=None) -> float:
    """Length of the fiber ray from the zero section out to ``|v|_{h^{-1}} = r``.

    The Hermitian norm of the velocity is integrated numerically against the
    total-space metric; for the rank-one disc bundle the value is
    ``arctanh(r)`` at every base point.
    """
    if not 0.0 <= r < 1.0:
        raise OutOfRange(f"ray radius must lie in [0, 1), got {r}")
    if bundle is None:
        from .models import get_model

        bundle = disc_bundle_chart(get_model("point"))
    zpt = np.zeros(bundle.base.m, dtype=complex) if base_point is None else np.asarray(base_point, dtype=complex)
    scale = np.sqrt(bundle.weight.h_at(zpt))
    k = bundle.fiber_rank
    e1 = np.zeros(k, dtype=complex)
    e1[0] = 1.0

    def speed(t):
        g = metric_at(bundle.total, bundle.join(t * scale * e1, zpt))
        return scale * np.sqrt(g[0, 0].real)

    if r == 0.0:
        return 0.0
    val, _ = integrate.quad(speed, 0.0, r, epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(val)
