"""Curvature-bound estimation and pinching-constant transfer tables.

Estimates are inner estimates: every reported bound is attained by a
witness, so ``lower >= inf`` and ``upper <= sup`` of the true curvature.
Optimization runs in a unitary frame of the metric at each sampled point,
where directions live on the round unit sphere and planes on the Stiefel
manifold of orthonormal real 2-frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DeltaTooSmall, NotNegativelyPinched, OutOfRange
from .kahler import as_chart, cholesky, curvature_at, ricci_ratio_range

KINDS = ("holomorphic", "sectional", "bisectional", "ricci")
CHUNK = 16
FD_STEP = 1e-5


@dataclass(frozen=True)
class Witness:
    value: float
    point_index: int
    start_index: int | None
    point: np.ndarray
    directions: tuple = ()


@dataclass(frozen=True)
class PinchBounds:
    lower: float
    upper: float
    kind: str
    witnesses: dict

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curvature kind {self.kind!r}")
        if self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")

    @property
    def A(self) -> float:
        return -self.lower

    @property
    def delta(self) -> float | None:
        """``upper / lower`` when the bounds are negative, else ``None``."""
        if self.lower < 0 and self.upper < 0:
            return self.upper / self.lower
        return None


# ---------------------------------------------------------------------------
# batched curvature functionals in a unitary frame
# ---------------------------------------------------------------------------


def _unitary_tensor(t):
    """Components in a frame where the metric is the identity, and the frame map."""
    L = cholesky(t.metric)
    M = np.linalg.inv(L.T)  # X = M @ Y has |X|_g = |Y|
    R = np.einsum("ijkl,ia,jb,kc,ld->abcd", t.components, M, M.conj(), M, M.conj())
    return R, M


def _complex(P: np.ndarray, n: int) -> np.ndarray:
    return (P[:, :n] + 1j * P[:, n:]) / np.sqrt(2.0)


def _R4(R, A, B, C, D) -> np.ndarray:
    """Row-wise ``R(A, conj B, C, conj D)``; reductions over fixed trailing axes."""
    T = (R[None] * D.conj()[:, None, None, None, :]).sum(axis=4)
    T = (T * C[:, None, None, :]).sum(axis=3)
    T = (T * B.conj()[:, None, :]).sum(axis=2)
    return (T * A).sum(axis=1)


def _hsc_batch(R, n):
    def f(P):
        X = _complex(P, n)
        n2 = (np.abs(X) ** 2).sum(axis=1)
        return _R4(R, X, X, X, X).real / n2**2

    return f


def _plane_frame(P: np.ndarray) -> np.ndarray:
    d = P.shape[1] // 2
    a, b = P[:, :d], P[:, d:]
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b - (a * b).sum(axis=1, keepdims=True) * a
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    return np.concatenate([a, b], axis=1)


def _sectional_batch(R, n):
    def f(P):
        F = _plane_frame(P)
        X, Y = _complex(F[:, : 2 * n], n), _complex(F[:, 2 * n :], n)
        return 2.0 * _R4(R, X, X, Y, Y).real - 2.0 * _R4(R, X, Y, X, Y).real

    return f


def _pair_frame(P: np.ndarray) -> np.ndarray:
    d = P.shape[1] // 2
    a, b = P[:, :d], P[:, d:]
    return np.concatenate(
        [a / np.linalg.norm(a, axis=1, keepdims=True), b / np.linalg.norm(b, axis=1, keepdims=True)], axis=1
    )


def _bisectional_batch(R, n):
    def f(P):
        F = _pair_frame(P)
        X, Y = _complex(F[:, : 2 * n], n), _complex(F[:, 2 * n :], n)
        return 4.0 * _R4(R, X, X, Y, Y).real

    return f


def _sphere(P: np.ndarray) -> np.ndarray:
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def _ascend(f: Callable, P: np.ndarray, normalize: Callable, max_iter: int, tol: float):
    """Multi-start gradient ascent with central-difference gradients.

    Rows never interact and the batch shape is fixed by the caller, so every
    row's trajectory is independent of its neighbours.
    """
    P = normalize(P)
    val = f(P)
    S, d = P.shape
    eta = np.full(S, 0.25)
    done = np.zeros(S, dtype=bool)
    shift = np.eye(d) * FD_STEP
    for _ in range(max_iter):
        if done.all():
            break
        plus = f((P[:, None, :] + shift).reshape(-1, d)).reshape(S, d)
        minus = f((P[:, None, :] - shift).reshape(-1, d)).reshape(S, d)
        grad = (plus - minus) / (2.0 * FD_STEP)
        gnorm = np.linalg.norm(grad, axis=1)
        safe = np.where(gnorm > 0, gnorm, 1.0)
        trial = normalize(P + (eta / safe)[:, None] * grad)
        tval = f(trial)
        gain = tval - val
        accept = (gain > 0) & ~done
        reject = ~accept & ~done
        P = np.where(accept[:, None], trial, P)
        val = np.where(accept, tval, val)
        eta = np.where(accept, eta * 1.5, np.where(reject, eta * 0.5, eta))
        done |= (accept & (gain < tol)) | (gnorm == 0) | (eta < 1e-12)
    return P, val


def _chunked_starts(seed: int, point_index: int, starts: int, dim: int) -> np.ndarray:
    nchunks = -(-starts // CHUNK)
    rows = []
    for j in range(nchunks * CHUNK):
        rng = np.random.default_rng([seed, 1, point_index, j])
        rows.append(rng.normal(size=dim))
    return np.array(rows)


def _default_sampler(chart):
    chart = as_chart(chart)
    return chart.sample


def _points(chart, sampler, seed: int, points: int):
    sampler = sampler or _default_sampler(chart)
    for i in range(points):
        yield i, np.asarray(sampler(np.random.default_rng([seed, 0, i])), dtype=complex)


def _estimate(chart, kind, sampler, points, starts, seed, max_iter, tol) -> PinchBounds:
    if points < 1 or starts < 1:
        raise ValueError("budget must allow at least one point and one start")
    chart = as_chart(chart)
    n = chart.m
    batch = {"holomorphic": _hsc_batch, "sectional": _sectional_batch, "bisectional": _bisectional_batch}[kind]
    normalize = {"holomorphic": _sphere, "sectional": _plane_frame, "bisectional": _pair_frame}[kind]
    dim = 2 * n if kind == "holomorphic" else 4 * n
    if kind == "sectional" and n < 1:
        raise ValueError("sectional curvature needs complex dimension >= 1")
    best = {"lower": None, "upper": None}
    for i, p in _points(chart, sampler, seed, points):
        R, M = _unitary_tensor(curvature_at(chart, p))
        f = batch(R, n)
        P0 = _chunked_starts(seed, i, starts, dim)
        for sign, key in ((1.0, "upper"), (-1.0, "lower")):
            results = []
            for c in range(0, len(P0), CHUNK):
                Pc, vc = _ascend(lambda P: sign * f(P), P0[c : c + CHUNK], normalize, max_iter, tol)
                results.append((Pc, sign * vc))
            P = np.concatenate([r[0] for r in results])[:starts]
            vals = np.concatenate([r[1] for r in results])[:starts]
            j = int(np.argmax(vals) if key == "upper" else np.argmin(vals))
            v = float(vals[j])
            cur = best[key]
            if cur is None or (v > cur.value if key == "upper" else v < cur.value):
                if kind == "holomorphic":
                    dirs = (M @ _complex(P[j : j + 1], n)[0],)
                else:
                    F = normalize(P[j : j + 1])
                    dirs = (M @ _complex(F[:, : 2 * n], n)[0], M @ _complex(F[:, 2 * n :], n)[0])
                best[key] = Witness(v, i, j, p, dirs)
    return PinchBounds(best["lower"].value, best["upper"].value, kind, best)


def estimate_hsc_bounds(chart, sampler=None, points=200, starts=64, seed=0, max_iter=200, tol=1e-10) -> PinchBounds:
    """Inner estimate of the holomorphic sectional curvature range.

    Parameters
    ----------
    chart : KahlerChart or BundleChart
    sampler : callable, optional
        ``sampler(rng) -> point``; defaults to the chart's own sampler.
    points, starts : int
        Sample points and random starts per point.
    seed : int
        Point ``i`` draws from substream ``(seed, 0, i)`` and start ``j``
        from ``(seed, 1, i, j)``, so a larger budget only adds work.
    """
    return _estimate(chart, "holomorphic", sampler, points, starts, seed, max_iter, tol)


def estimate_sectional_bounds(chart, sampler=None, points=200, starts=64, seed=0, max_iter=200, tol=1e-10):
    """Inner estimate of the real sectional curvature range over 2-planes."""
    return _estimate(chart, "sectional", sampler, points, starts, seed, max_iter, tol)


def estimate_bisectional_bounds(chart, sampler=None, points=200, starts=64, seed=0, max_iter=200, tol=1e-10):
    return _estimate(chart, "bisectional", sampler, points, starts, seed, max_iter, tol)


def estimate_ricci_bounds(chart, sampler=None, points=200, seed=0) -> PinchBounds:
    """Range of Ricci eigenvalues relative to the metric over sampled points."""
    best = {"lower": None, "upper": None}
    for i, p in _points(chart, sampler, seed, points):
        lo, hi = ricci_ratio_range(chart, p)
        if best["lower"] is None or lo < best["lower"].value:
            best["lower"] = Witness(lo, i, None, p)
        if best["upper"] is None or hi > best["upper"].value:
            best["upper"] = Witness(hi, i, None, p)
    return PinchBounds(best["lower"].value, best["upper"].value, "ricci", best)


def estimate_bounds(chart, kind: str = "holomorphic", **kw) -> PinchBounds:
    if kind == "ricci":
        kw.pop("starts", None)
        kw.pop("max_iter", None)
        kw.pop("tol", None)
        return estimate_ricci_bounds(chart, **kw)
    return {
        "holomorphic": estimate_hsc_bounds,
        "sectional": estimate_sectional_bounds,
        "bisectional": estimate_bisectional_bounds,
    }[kind](chart, **kw)


# ---------------------------------------------------------------------------
# transfer tables
# ---------------------------------------------------------------------------

_HALF = Fraction(1, 2)
_THREE_HALVES = Fraction(3, 2)
_TWO = Fraction(2)


def _pinched_pair(lo, hi):
    if hi >= 0:
        raise NotNegativelyPinched(f"upper bound {hi} is not negative")
    if lo > hi:
        raise OutOfRange(f"lower bound {lo} exceeds upper bound {hi}")


def hsc_bound_transfer(C1, C2):
    """Disc-bundle HSC bounds ``(min(-2, C1), max(-2, C2))`` from base bounds."""
    _pinched_pair(C1, C2)
    return min(-_TWO, C1), max(-_TWO, C2)


def sect_bound_transfer(c1, c2):
    """Disc-bundle sectional bounds ``(min(-2, c1 - 3/2), max(-2, c2))``."""
    _pinched_pair(c1, c2)
    return min(-_TWO, c1 - _THREE_HALVES), max(-_TWO, c2)


def _check_pinch(A, delta):
    if not A > 0:
        raise OutOfRange(f"A must be positive, got {A}")
    if not 0 < delta <= 1:
        raise OutOfRange(f"delta must lie in (0, 1], got {delta}")


def holo_pinch_transfer(A, delta):
    """Holomorphic pinching constant of the disc bundle given ``(A, delta)`` of the base."""
    _check_pinch(A, delta)
    if A >= 2:
        if delta <= _TWO / A:
            return delta
        return _TWO / A
    return delta * A / 2


def sect_pinch_transfer(A, delta):
    """Sectional pinching constant of the disc bundle given ``(A, delta)`` of the base."""
    _check_pinch(A, delta)
    if A >= _HALF:
        if delta <= min(1, _TWO / A):
            return delta * A / (A + _THREE_HALVES)
        return _TWO / (A + _THREE_HALVES)
    return delta * A / 2


def holo_to_sectional(A, delta):
    """Sectional bounds ``(-A, -(3 delta - 2) A / 4)`` implied by HSC in ``[-A, -delta A]``."""
    if not A > 0:
        raise OutOfRange(f"A must be positive, got {A}")
    if not delta <= 1:
        raise OutOfRange(f"delta must be at most 1, got {delta}")
    if delta <= Fraction(2, 3):
        raise DeltaTooSmall(f"delta = {delta} must exceed 2/3")
    return -A, -(3 * delta - 2) * A / 4


def angle_model_sectional(c, alpha):
    """Sectional curvature ``(c/4)(1 + 3 cos^2 alpha)`` in constant HSC ``c``."""
    return c / 4 * (1 + 3 * math.cos(alpha) ** 2)
