"""Kähler charts, curvature tensors and curvature functionals.

Conventions
-----------
``g_{i j̄} = d_{z_i} d_{w_j} F`` where ``F`` is the polarized potential.  The
curvature tensor is

    R_{i j̄ k l̄} = -d_k d̄_l g_{i j̄} + g^{p q̄} (d_k g_{i q̄}) (d̄_l g_{p j̄}),

so the unit ball potential ``-log(1 - |z|^2)`` has holomorphic sectional
curvature ``-2``.  Real tangent vectors are encoded by their (1,0) parts,
``x = X + conj(X)``, with real inner product ``<x, y> = 2 Re g(X, conj Y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DegeneratePlane, DomainError, NotPositiveDefinite, ZeroDirection
from .polarized import PolarizedExpr, Taylor, _basis, diagonal, eval_jet

PIVOT_TOL = 1e-12


def _everywhere(p) -> bool:
    return True


@dataclass(frozen=True)
class KahlerChart:
    """A local chart of a Kähler manifold given by a potential.

    Attributes
    ----------
    m : int
        Complex dimension.
    potential : PolarizedExpr
        Polarized Kähler potential in ``m`` slot pairs.
    domain : callable
        Predicate on complex ``m``-vectors.
    sampler : callable, optional
        ``sampler(rng) -> point`` drawing points well inside the domain.
    name : str
    hsc_range : tuple, optional
        Known (min, max) of the holomorphic sectional curvature, if any.
    """

    m: int
    potential: PolarizedExpr
    domain: Callable[[np.ndarray], bool] = _everywhere
    sampler: Callable[[np.random.Generator], np.ndarray] | None = field(default=None, compare=False)
    name: str = ""
    hsc_range: tuple | None = None

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=complex).ravel()
        return p.size == self.m and bool(self.domain(p))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.sampler is None:
            raise DomainError(f"chart {self.name or '?'} has no sampler")
        return np.asarray(self.sampler(rng), dtype=complex)


def as_chart(obj) -> KahlerChart:
    """Accept a :class:`KahlerChart` or anything carrying one as ``.total``."""
    return getattr(obj, "total", obj)


def _check_point(chart: KahlerChart, p) -> np.ndarray:
    p = np.asarray(p, dtype=complex).ravel()
    if p.size != chart.m:
        raise DomainError(f"point of length {p.size} in a chart of dimension {chart.m}")
    if not chart.domain(p):
        raise DomainError(f"point {p} outside the domain of {chart.name or 'chart'}")
    return p


def potential_jet(chart, p, order: int = 4):
    chart = as_chart(chart)
    p = _check_point(chart, p)
    return eval_jet(chart.potential, diagonal(p), order)


def cholesky(g: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`NotPositiveDefinite` on small pivots."""
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("metric is not positive definite") from exc
    if g.shape[0] and np.min(np.abs(np.diag(L))) ** 2 < PIVOT_TOL:
        raise NotPositiveDefinite("metric pivot below tolerance")
    return L


def metric_at(chart, p) -> np.ndarray:
    """Hermitian matrix ``g_{j k̄} = d_j d̄_k potential`` at ``p``."""
    jet = potential_jet(chart, p, 2)
    g = jet.partials(1, 1)
    g = 0.5 * (g + g.conj().T)
    cholesky(g)
    return g


# ---------------------------------------------------------------------------
# curvature tensor
# ---------------------------------------------------------------------------


def _vec(X, m: int) -> np.ndarray:
    X = np.asarray(X, dtype=complex).ravel()
    if X.size != m:
        raise ValueError(f"direction of length {X.size}, expected {m}")
    return X


@dataclass(frozen=True)
class RealTwoPlane:
    """Real 2-plane spanned by ``x = X + conj X`` and ``y = Y + conj Y``."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=complex).ravel())
        object.__setattr__(self, "Y", np.asarray(self.Y, dtype=complex).ravel())


@dataclass(frozen=True, eq=False)
class CurvatureTensor:
    """Components ``R[i, j, k, l] = R_{i j̄ k l̄}`` at a point with the metric there."""

    point: np.ndarray
    metric: np.ndarray
    components: np.ndarray

    @property
    def m(self) -> int:
        return self.metric.shape[0]

    # inner products ----------------------------------------------------------

    def herm(self, X, Y) -> complex:
        """``g(X, conj Y) = sum g_{i j̄} X_i conj(Y_j)``."""
        return complex(X @ self.metric @ np.conj(Y))

    def norm2(self, X) -> float:
        return self.herm(X, X).real

    def real_inner(self, X, Y) -> float:
        """``<x, y> = 2 Re g(X, conj Y)`` for ``x = X + conj X``, ``y = Y + conj Y``."""
        return 2.0 * self.herm(X, Y).real

    def wedge2(self, X, Y) -> float:
        """``|x ^ y|^2`` in the real inner product."""
        return self.real_inner(X, X) * self.real_inner(Y, Y) - self.real_inner(X, Y) ** 2

    # contractions --------------------------------------------------------------

    def R(self, A, B, C, D) -> complex:
        """``R(A, conj B, C, conj D)`` for (1,0) vectors ``A..D``."""
        return complex(np.einsum("ijkl,i,j,k,l->", self.components, A, np.conj(B), C, np.conj(D)))

    def Q(self, X) -> float:
        X = _vec(X, self.m)
        return self.R(X, X, X, X).real

    def hsc(self, X) -> float:
        X = _vec(X, self.m)
        n2 = self.norm2(X)
        if not np.any(X) or n2 <= 0:
            raise ZeroDirection("holomorphic sectional curvature needs a nonzero direction")
        return self.Q(X) / n2**2

    def bisectional(self, X, Y) -> float:
        X, Y = _vec(X, self.m), _vec(Y, self.m)
        nx, ny = self.norm2(X), self.norm2(Y)
        if not np.any(X) or not np.any(Y) or nx <= 0 or ny <= 0:
            raise ZeroDirection("bisectional curvature needs nonzero directions")
        return self.R(X, X, Y, Y).real / (nx * ny)

    def ricci(self) -> np.ndarray:
        """Trace ``g^{i j̄} R_{i j̄ k l̄}``; equals the Ricci form matrix."""
        ginv = np.linalg.inv(self.metric)
        return np.einsum("ji,ijkl->kl", ginv, self.components)

    # real sectional curvature -----------------------------------------------

    def polarized_sum(self, X, Y) -> float:
        """``R(x, y, y, x)`` through the six-term expansion in ``Q``."""
        Q = self.Q
        return (
            -0.125 * Q(X + Y)
            - 0.125 * Q(X - Y)
            + 0.375 * Q(X + 1j * Y)
            + 0.375 * Q(X - 1j * Y)
            - 0.5 * Q(X)
            - 0.5 * Q(Y)
        )

    def real_tensor(self) -> np.ndarray:
        """Curvature on the complexified tangent space, basis ``(e_1..e_m, ē_1..ē_m)``."""
        m = self.m
        R = self.components
        out = np.zeros((2 * m,) * 4, dtype=complex)
        h, a = slice(0, m), slice(m, 2 * m)
        out[h, a, h, a] = R
        out[a, h, h, a] = -R.transpose(1, 0, 2, 3)
        out[h, a, a, h] = -R.transpose(0, 1, 3, 2)
        out[a, h, a, h] = R.transpose(1, 0, 3, 2)
        return out

    def direct_contraction(self, X, Y) -> float:
        """``R(x, y, y, x)`` by contracting :meth:`real_tensor` with real vectors."""
        x = np.concatenate([X, np.conj(X)])
        y = np.concatenate([Y, np.conj(Y)])
        val = np.einsum("abcd,a,b,c,d->", self.real_tensor(), x, y, y, x)
        return float(val.real)

    def sectional(self, plane: RealTwoPlane, method: str = "polarization") -> float:
        X, Y = _vec(plane.X, self.m), _vec(plane.Y, self.m)
        w2 = self.wedge2(X, Y)
        scale = self.real_inner(X, X) * self.real_inner(Y, Y)
        if not scale > 0 or w2 < 1e-14 * scale:
            raise DegeneratePlane("plane vectors are linearly dependent over the reals")
        if method == "polarization":
            num = self.polarized_sum(X, Y)
        elif method == "direct":
            num = self.direct_contraction(X, Y)
        else:
            raise ValueError(f"unknown method {method!r}")
        return num / w2

    def orthonormal_plane(self, plane: RealTwoPlane) -> tuple[np.ndarray, np.ndarray]:
        """Gram–Schmidt in the real inner product, normalizing ``x`` first."""
        X, Y = _vec(plane.X, self.m), _vec(plane.Y, self.m)
        nx = self.real_inner(X, X)
        if not nx > 0:
            raise DegeneratePlane("first plane vector vanishes")
        Xh = X / np.sqrt(nx)
        Yp = Y - self.real_inner(Y, Xh) * Xh
        ny = self.real_inner(Yp, Yp)
        if ny < 1e-14 * self.real_inner(Y, Y) or not ny > 0:
            raise DegeneratePlane("plane vectors are linearly dependent over the reals")
        return Xh, Yp / np.sqrt(ny)

    def cos2_alpha(self, plane: RealTwoPlane) -> float:
        """``cos^2`` of the angle between the plane and its image under ``J``."""
        Xh, Yh = self.orthonormal_plane(plane)
        return self.real_inner(Xh, 1j * Yh) ** 2

    def symmetry_residuals(self) -> dict:
        R = self.components
        herm = np.max(np.abs(R - np.conj(R.transpose(1, 0, 3, 2)))) if R.size else 0.0
        k1 = np.max(np.abs(R - R.transpose(2, 1, 0, 3))) if R.size else 0.0
        k2 = np.max(np.abs(R - R.transpose(0, 3, 2, 1))) if R.size else 0.0
        return {"hermitian": float(herm), "kahler": float(max(k1, k2))}


def curvature_at(chart, p) -> CurvatureTensor:
    """Full curvature tensor of ``chart`` at ``p``."""
    jet = potential_jet(chart, p, 4)
    g = jet.partials(1, 1)
    g = 0.5 * (g + g.conj().T)
    cholesky(g)
    ginv = np.linalg.inv(g)
    F21 = jet.partials(2, 1)  # [i, k, q] = d_i d_k d̄_q F = d_k g_{i q̄}
    F12 = jet.partials(1, 2)  # [p, j, l] = d_p d̄_j d̄_l F = d̄_l g_{p j̄}
    F22 = jet.partials(2, 2)  # [i, k, j, l]
    # g^{p q̄} pairs with g_{r q̄}: as a matrix it is ginv transposed
    R = -F22.transpose(0, 2, 1, 3) + np.einsum("qp,ikq,pjl->ijkl", ginv, F21, F12)
    return CurvatureTensor(np.asarray(p, dtype=complex).ravel(), g, R)


def Q(t: CurvatureTensor, X) -> float:
    """``R(X, conj X, X, conj X)``."""
    return t.Q(X)


def hsc(chart, p, X) -> float:
    """Holomorphic sectional curvature ``Q(X) / |X|^4``."""
    return curvature_at(chart, p).hsc(X)


def bisectional(chart, p, X, Y) -> float:
    return curvature_at(chart, p).bisectional(X, Y)


def real_sectional(t: CurvatureTensor, plane: RealTwoPlane, method: str = "polarization") -> float:
    """Sectional curvature of a real 2-plane.

    ``method="polarization"`` uses the six-term expansion in ``Q``;
    ``method="direct"`` contracts the complexified real tensor.
    """
    return t.sectional(plane, method)


# ---------------------------------------------------------------------------
# Ricci form via log det
# ---------------------------------------------------------------------------


def _metric_series(jet, m: int) -> list[list[Taylor]]:
    """Second-order Taylor series of every metric entry around the point."""
    b4 = jet.taylor.basis
    b2 = _basis(2 * m, 2)
    raw = jet.taylor.raw()
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            shift = np.zeros(2 * m, dtype=np.int64)
            shift[i] += 1
            shift[m + j] += 1
            idx = [b4.index[tuple(int(v) for v in e + shift)] for e in b2.exps]
            row.append(Taylor(b2, raw[idx] / b2.factorial))
        rows.append(row)
    return rows


def ricci_form_at(chart, p) -> np.ndarray:
    """Matrix of ``-d_j d̄_k log det g`` at ``p``.

    The determinant is expanded in truncated Taylor arithmetic, so this route
    never touches the curvature tensor.
    """
    chart = as_chart(chart)
    jet = potential_jet(chart, p, 4)
    m = chart.m
    g0 = jet.partials(1, 1)
    cholesky(0.5 * (g0 + g0.conj().T))
    A = _metric_series(jet, m)
    logdet = Taylor.constant(2 * m, 2, 0.0)
    for c in range(m):
        pivot = A[c][c]
        logdet = logdet + pivot.log()
        inv = pivot.reciprocal()
        for r in range(c + 1, m):
            factor = A[r][c] * inv
            for s in range(c + 1, m):
                A[r][s] = A[r][s] - factor * A[c][s]
    raw = logdet.raw()
    b2 = logdet.basis
    ric = np.empty((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            e = [0] * (2 * m)
            e[j] += 1
            e[m + k] += 1
            ric[j, k] = -raw[b2.index[tuple(e)]]
    return 0.5 * (ric + ric.conj().T)


def ricci_ratio_range(chart, p) -> tuple[float, float]:
    """(min, max) generalized eigenvalues of the Ricci matrix relative to the metric."""
    g = metric_at(chart, p)
    ric = ricci_form_at(chart, p)
    if g.shape[0] == 0:
        return (0.0, 0.0)
    vals = scipy.linalg.eigh(ric, g, eigvals_only=True)
    return float(vals[0]), float(vals[-1])
