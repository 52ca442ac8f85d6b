"""Polarized expressions and truncated multivariate Taylor arithmetic.

A real-analytic function ``phi(z, zbar)`` on ``C^n`` is written in polarized
form ``F(z, w)``, holomorphic in ``2n`` independent slots.  Wirtinger
derivatives of ``phi`` at ``p`` are then plain partial derivatives of ``F`` at
``(p, conj(p))``, which the Taylor engine below computes to machine precision.

Slot layout for an ``n``-pair expression: ``z_1..z_n`` occupy slots
``0..n-1`` and ``w_1..w_n`` occupy slots ``n..2n-1``.

Text format (prefix, parenthesised)::

    (neg (log (sub 1 (mul z1 w1))))

Atoms are numbers (``2``, ``-0.5``, ``1e-3``, ``2+1j``) and variables ``zK`` /
``wK`` with 1-based ``K``.  Operators: ``add`` and ``mul`` (n-ary), ``sub``
(unary or binary), ``div``, ``neg``, ``exp``, ``log`` and ``pow`` whose second
argument is an integer literal.
"""

from __future__ import annotations

import cmath
import itertools
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, OrderError

MAX_ORDER = 4

__all__ = [
    "MAX_ORDER",
    "PolarizedExpr",
    "Taylor",
    "Jet",
    "const",
    "z",
    "w",
    "exp",
    "log",
    "eval_jet",
    "evaluate",
    "check_real_potential",
    "RealityReport",
    "parse",
]


# ---------------------------------------------------------------------------
# monomial bases
# ---------------------------------------------------------------------------


class _Basis:
    """Monomials of total degree <= ``order`` in ``nvars`` variables."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps = []
        for d in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), d):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.degree = self.exps.sum(axis=1)
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in e) for e in exps], dtype=float
        )
        self.linear = np.array(
            [self.index[tuple(int(i == v) for i in range(nvars))] for v in range(nvars)],
            dtype=np.int64,
        )
        self._build_products()

    def _key(self, exps: np.ndarray) -> np.ndarray:
        radix = (self.order + 1) ** np.arange(self.nvars, dtype=np.int64)
        return exps @ radix

    def _build_products(self) -> None:
        keys = self._key(self.exps)
        order = np.argsort(keys)
        sorted_keys = keys[order]
        by_degree = [np.flatnonzero(self.degree == d) for d in range(self.order + 1)]
        left, right, out = [], [], []
        for d1 in range(self.order + 1):
            for d2 in range(self.order + 1 - d1):
                i1, i2 = by_degree[d1], by_degree[d2]
                if i1.size == 0 or i2.size == 0:
                    continue
                a, b = np.meshgrid(i1, i2, indexing="ij")
                a, b = a.ravel(), b.ravel()
                k = self._key(self.exps[a] + self.exps[b])
                pos = np.searchsorted(sorted_keys, k)
                left.append(a)
                right.append(b)
                out.append(order[pos])
        self.left = np.concatenate(left)
        self.right = np.concatenate(right)
        self.out = np.concatenate(out)


@lru_cache(maxsize=None)
def _basis(nvars: int, order: int) -> _Basis:
    return _Basis(nvars, order)


# ---------------------------------------------------------------------------
# truncated Taylor series
# ---------------------------------------------------------------------------


class Taylor:
    """Truncated multivariate Taylor series with complex coefficients.

    Coefficients are stored divided by multi-index factorials (plain Taylor
    coefficients); :meth:`raw` converts back to partial derivatives.
    """

    __slots__ = ("basis", "c")

    def __init__(self, basis: _Basis, coeffs: np.ndarray):
        self.basis = basis
        self.c = coeffs

    @classmethod
    def constant(cls, nvars: int, order: int, value: complex) -> "Taylor":
        b = _basis(nvars, order)
        c = np.zeros(b.size, dtype=complex)
        c[0] = value
        return cls(b, c)

    @classmethod
    def variable(cls, nvars: int, order: int, slot: int, value: complex) -> "Taylor":
        b = _basis(nvars, order)
        c = np.zeros(b.size, dtype=complex)
        c[0] = value
        if order >= 1:
            c[b.linear[slot]] = 1.0
        return cls(b, c)

    @property
    def value(self) -> complex:
        return complex(self.c[0])

    def raw(self) -> np.ndarray:
        return self.c * self.basis.factorial

    def _new(self, c: np.ndarray) -> "Taylor":
        return Taylor(self.basis, c)

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Taylor):
            return self._new(self.c + other.c)
        c = self.c.copy()
        c[0] += other
        return self._new(c)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return self._new(self.c * other)
        b = self.basis
        prod = self.c[b.left] * other.c[b.right]
        re_ = np.bincount(b.out, weights=prod.real, minlength=b.size)
        im_ = np.bincount(b.out, weights=prod.imag, minlength=b.size)
        return self._new(re_ + 1j * im_)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Taylor):
            if other == 0:
                raise DomainError("division by zero")
            return self._new(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return (self ** (-n)).reciprocal()
        result = Taylor.constant(self.basis.nvars, self.basis.order, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # univariate composition --------------------------------------------------

    def compose(self, derivs: Sequence[complex]) -> "Taylor":
        """Return ``f(self)`` given ``derivs[k] = f^(k)(self.value)``."""
        t = self._new(self.c.copy())
        t.c[0] = 0.0
        out = np.zeros_like(self.c)
        out[0] = derivs[0]
        power = None
        for k in range(1, self.basis.order + 1):
            power = t if power is None else power * t
            out = out + (derivs[k] / math.factorial(k)) * power.c
        return self._new(out)

    def exp(self) -> "Taylor":
        e = cmath.exp(self.value)
        return self.compose([e] * (self.basis.order + 1))

    def log(self) -> "Taylor":
        a = self.value
        if a.imag == 0.0 and a.real <= 0.0:
            raise DomainError(f"log argument {a} on the closed negative real axis")
        derivs = [cmath.log(a)]
        for k in range(1, self.basis.order + 1):
            derivs.append((-1) ** (k - 1) * math.factorial(k - 1) / a**k)
        return self.compose(derivs)

    def reciprocal(self) -> "Taylor":
        a = self.value
        if a == 0:
            raise DomainError("division by a series with zero constant term")
        derivs = [(-1) ** k * math.factorial(k) / a ** (k + 1) for k in range(self.basis.order + 1)]
        return self.compose(derivs)


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

_UNARY = ("neg", "exp", "log")
_BINARY = ("add", "sub", "mul", "div")


@dataclass(frozen=True)
class PolarizedExpr:
    """Immutable expression DAG node.

    ``op`` is one of ``const``, ``z``, ``w``, ``add``, ``sub``, ``mul``,
    ``div``, ``neg``, ``exp``, ``log``, ``pow``.  ``value`` holds the constant,
    the 0-based slot index for variables, or the integer exponent for ``pow``.
    Nodes may be shared; equality is structural.
    """

    op: str
    args: tuple = ()
    value: object = None

    # construction helpers
    @staticmethod
    def lift(x) -> "PolarizedExpr":
        if isinstance(x, PolarizedExpr):
            return x
        if isinstance(x, (int, float, complex, np.number)):
            return PolarizedExpr("const", (), complex(x) if isinstance(x, (complex, np.complexfloating)) else x)
        raise TypeError(f"cannot build an expression from {type(x).__name__}")

    def __add__(self, other):
        return PolarizedExpr("add", (self, PolarizedExpr.lift(other)))

    def __radd__(self, other):
        return PolarizedExpr("add", (PolarizedExpr.lift(other), self))

    def __sub__(self, other):
        return PolarizedExpr("sub", (self, PolarizedExpr.lift(other)))

    def __rsub__(self, other):
        return PolarizedExpr("sub", (PolarizedExpr.lift(other), self))

    def __mul__(self, other):
        return PolarizedExpr("mul", (self, PolarizedExpr.lift(other)))

    def __rmul__(self, other):
        return PolarizedExpr("mul", (PolarizedExpr.lift(other), self))

    def __truediv__(self, other):
        return PolarizedExpr("div", (self, PolarizedExpr.lift(other)))

    def __rtruediv__(self, other):
        return PolarizedExpr("div", (PolarizedExpr.lift(other), self))

    def __neg__(self):
        return PolarizedExpr("neg", (self,))

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return PolarizedExpr("pow", (self,), int(n))

    def exp(self) -> "PolarizedExpr":
        return PolarizedExpr("exp", (self,))

    def log(self) -> "PolarizedExpr":
        return PolarizedExpr("log", (self,))

    # structure ----------------------------------------------------------------

    def _walk(self):
        seen = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            yield node
            stack.extend(node.args)

    @property
    def nslots(self) -> int:
        """Smallest ``n`` such that every variable index is ``< n``."""
        idx = [node.value for node in self._walk() if node.op in ("z", "w")]
        return max(idx) + 1 if idx else 0

    def substitute(self, mapping) -> "PolarizedExpr":
        """Replace variables; ``mapping(op, index)`` returns an expression or None."""
        memo = {}

        def go(node):
            key = id(node)
            if key in memo:
                return memo[key]
            if node.op in ("z", "w"):
                rep = mapping(node.op, node.value)
                out = node if rep is None else PolarizedExpr.lift(rep)
            elif node.op == "const":
                out = node
            else:
                args = tuple(go(a) for a in node.args)
                out = node if all(a is b for a, b in zip(args, node.args)) else PolarizedExpr(node.op, args, node.value)
            memo[key] = out
            return out

        return go(self)

    def shift(self, offset: int) -> "PolarizedExpr":
        """Move every variable ``z_i, w_i`` to ``z_{i+offset}, w_{i+offset}``."""
        if offset == 0:
            return self
        return self.substitute(lambda op, i: PolarizedExpr(op, (), i + offset))

    def to_text(self) -> str:
        return _to_text(self)

    def __str__(self) -> str:
        return self.to_text()


def const(value) -> PolarizedExpr:
    return PolarizedExpr.lift(value)


def z(i: int) -> PolarizedExpr:
    """Holomorphic slot ``z_{i+1}`` (0-based index)."""
    return PolarizedExpr("z", (), int(i))


def w(i: int) -> PolarizedExpr:
    """Conjugate slot ``w_{i+1}`` standing for ``conj(z_{i+1})``."""
    return PolarizedExpr("w", (), int(i))


def exp(e) -> PolarizedExpr:
    return PolarizedExpr.lift(e).exp()


def log(e) -> PolarizedExpr:
    return PolarizedExpr.lift(e).log()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _scalar_op(op, args, value):
    if op == "add":
        return args[0] + args[1]
    if op == "sub":
        return args[0] - args[1]
    if op == "mul":
        return args[0] * args[1]
    if op == "div":
        if args[1] == 0:
            raise DomainError("division by zero")
        return args[0] / args[1]
    if op == "neg":
        return -args[0]
    if op == "exp":
        return cmath.exp(args[0])
    if op == "log":
        a = complex(args[0])
        if a.imag == 0.0 and a.real <= 0.0:
            raise DomainError(f"log argument {a} on the closed negative real axis")
        return cmath.log(a)
    if op == "pow":
        if value < 0 and args[0] == 0:
            raise DomainError("negative power of zero")
        return args[0] ** value
    raise ValueError(f"unknown op {op!r}")


def _taylor_op(op, args, value):
    a = args[0]
    if op in _BINARY:
        b = args[1]
        if not isinstance(a, Taylor):
            # scalar on the left; Taylor on the right
            if op == "add":
                return b + a
            if op == "sub":
                return (-b) + a
            if op == "mul":
                return b * a
            return b.reciprocal() * a
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        return a / b
    if op == "neg":
        return -a
    if op == "exp":
        return a.exp()
    if op == "log":
        return a.log()
    if op == "pow":
        return a**value
    raise ValueError(f"unknown op {op!r}")


def _evaluate(expr: PolarizedExpr, point: np.ndarray, order: int | None):
    n = len(point) // 2
    nvars = len(point)
    memo = {}
    # iterative post-order walk; deep DAGs must not hit the recursion limit
    stack = [(expr, False)]
    while stack:
        node, ready = stack.pop()
        key = id(node)
        if key in memo:
            continue
        if node.op == "const":
            memo[key] = node.value
            continue
        if node.op in ("z", "w"):
            if node.value >= n:
                raise DomainError(f"variable {node.op}{node.value + 1} outside a {n}-pair point")
            slot = node.value if node.op == "z" else n + node.value
            x = complex(point[slot])
            memo[key] = x if order is None else Taylor.variable(nvars, order, slot, x)
            continue
        if not ready:
            stack.append((node, True))
            stack.extend((a, False) for a in node.args if id(a) not in memo)
            continue
        args = [memo[id(a)] for a in node.args]
        if any(isinstance(a, Taylor) for a in args):
            memo[key] = _taylor_op(node.op, args, node.value)
        else:
            memo[key] = _scalar_op(node.op, args, node.value)
    out = memo[id(expr)]
    if order is not None and not isinstance(out, Taylor):
        out = Taylor.constant(nvars, order, out)
    return out


def evaluate(expr: PolarizedExpr, point) -> complex:
    """Plain value of ``expr`` at a point of length ``2n``."""
    point = np.asarray(point, dtype=complex).ravel()
    return complex(_evaluate(expr, point, None))


class Jet:
    """Raw partial derivatives of a polarized expression at one point.

    ``jet[a, b]`` with exponent tuples ``a`` (z-slots) and ``b`` (w-slots)
    returns ``d^a_z d^b_w F``.
    """

    def __init__(self, taylor: Taylor, n: int):
        self.taylor = taylor
        self.n = n
        self.order = taylor.basis.order
        self._raw = taylor.raw()

    @property
    def value(self) -> complex:
        return complex(self._raw[0])

    def __getitem__(self, key):
        a, b = key
        e = tuple(a) + tuple(b)
        if len(e) != 2 * self.n:
            raise KeyError(key)
        if sum(e) > self.order:
            raise OrderError(f"multi-index of order {sum(e)} beyond jet order {self.order}")
        return complex(self._raw[self.taylor.basis.index[e]])

    def d(self, *slots: int) -> complex:
        """Derivative with respect to the listed slots (0-based, w-slots from ``n``)."""
        e = [0] * (2 * self.n)
        for s in slots:
            e[s] += 1
        return self[tuple(e[: self.n]), tuple(e[self.n :])]

    def items(self):
        """Iterate ``((a, b), derivative)`` over every stored multi-index."""
        for e, val in zip(self.taylor.basis.exps, self._raw):
            e = tuple(int(k) for k in e)
            yield (e[: self.n], e[self.n :]), complex(val)

    def partials(self, zcount: int, wcount: int) -> np.ndarray:
        """Array ``A[i1..i_zc, j1..j_wc] = d_{z_i1}..d_{w_j1}.. F``."""
        if zcount + wcount > self.order:
            raise OrderError(f"order {zcount + wcount} beyond jet order {self.order}")
        idx = _partial_index(self.n, self.order, zcount, wcount)
        return self._raw[idx]


@lru_cache(maxsize=None)
def _partial_index(n: int, order: int, zcount: int, wcount: int) -> np.ndarray:
    b = _basis(2 * n, order)
    shape = (n,) * (zcount + wcount)
    idx = np.empty(shape, dtype=np.int64)
    for combo in itertools.product(range(n), repeat=zcount + wcount):
        e = [0] * (2 * n)
        for pos, s in enumerate(combo):
            e[s if pos < zcount else n + s] += 1
        idx[combo] = b.index[tuple(e)]
    return idx


def eval_jet(expr: PolarizedExpr, point, order: int) -> Jet:
    """Raw mixed derivatives of ``expr`` up to total ``order`` at ``point``.

    Parameters
    ----------
    expr : PolarizedExpr
    point : array_like
        Complex vector ``(z_1..z_n, w_1..w_n)`` of length ``2n``.
    order : int
        Maximum total derivative order, at most 4.

    Raises
    ------
    OrderError
        If ``order`` is negative or above 4.
    DomainError
        On a log or division singularity at ``point``.
    """
    if order < 0 or order > MAX_ORDER:
        raise OrderError(f"derivative order must be in [0, {MAX_ORDER}], got {order}")
    point = np.asarray(point, dtype=complex).ravel()
    if point.size % 2:
        raise ValueError("point must have even length 2n")
    return Jet(_evaluate(expr, point, order), point.size // 2)


def diagonal(p) -> np.ndarray:
    """Polarized point ``(p, conj(p))``."""
    p = np.asarray(p, dtype=complex).ravel()
    return np.concatenate([p, p.conj()])


@dataclass(frozen=True)
class RealityReport:
    ok: bool
    max_imag: float
    worst_index: int | None

    def __bool__(self) -> bool:
        return self.ok


def check_real_potential(expr: PolarizedExpr, sample_points: Iterable, tol: float = 1e-12) -> RealityReport:
    """Check ``|Im F(p, conj p)| < tol`` at every sample ``p`` (an ``n``-vector)."""
    worst, worst_i = 0.0, None
    for i, p in enumerate(sample_points):
        im = abs(evaluate(expr, diagonal(p)).imag)
        if worst_i is None or im > worst:
            worst, worst_i = im, i
    return RealityReport(worst < tol, worst, worst_i)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")
_VAR = re.compile(r"^([zw])([1-9][0-9]*)$")


def _tokenize(text: str):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot tokenize at {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _atom(tok: str) -> PolarizedExpr:
    m = _VAR.match(tok)
    if m:
        i = int(m.group(2)) - 1
        return z(i) if m.group(1) == "z" else w(i)
    for cast in (int, float, complex):
        try:
            return const(cast(tok))
        except ValueError:
            pass
    raise ValueError(f"unknown atom {tok!r}")


def parse(text: str) -> PolarizedExpr:
    """Build an expression from the prefix text format."""
    tokens = _tokenize(text)
    if not tokens:
        raise ValueError("empty expression")
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of expression")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise ValueError("unexpected ')'")
        if tok != "(":
            return tok if tok in _OPS else _atom(tok)
        if pos >= len(tokens):
            raise ValueError("unexpected end of expression")
        op = tokens[pos]
        pos += 1
        if op not in _OPS:
            raise ValueError(f"unknown operator {op!r}")
        raw_args = []
        while True:
            if pos >= len(tokens):
                raise ValueError("missing ')'")
            if tokens[pos] == ")":
                pos += 1
                break
            raw_args.append(read())
        return _apply(op, raw_args)

    out = read()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens: {' '.join(tokens[pos:])}")
    if isinstance(out, str):
        raise ValueError(f"bare operator {out!r}")
    return out


_OPS = ("add", "sub", "mul", "div", "neg", "exp", "log", "pow")


def _apply(op: str, args: list) -> PolarizedExpr:
    if any(isinstance(a, str) for a in args):
        raise ValueError(f"operator used as an argument of {op!r}")
    if op in ("add", "mul"):
        if len(args) < 2:
            raise ValueError(f"{op} needs at least two arguments")
        out = args[0]
        for a in args[1:]:
            out = out + a if op == "add" else out * a
        return out
    if op == "sub":
        if len(args) == 1:
            return -args[0]
        if len(args) != 2:
            raise ValueError("sub takes one or two arguments")
        return args[0] - args[1]
    if op == "div":
        if len(args) != 2:
            raise ValueError("div takes two arguments")
        return args[0] / args[1]
    if op == "pow":
        if len(args) != 2 or args[1].op != "const" or not float(np.real(args[1].value)).is_integer() \
                or np.imag(args[1].value) != 0:
            raise ValueError("pow takes an expression and an integer literal")
        return args[0] ** int(np.real(args[1].value))
    if len(args) != 1:
        raise ValueError(f"{op} takes one argument")
    if op == "neg":
        return -args[0]
    return getattr(args[0], op)()


def _fmt_const(v) -> str:
    if isinstance(v, complex):
        if v.imag == 0:
            v = v.real
        else:
            return repr(v).strip("()")
    if isinstance(v, float) and v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _to_text(e: PolarizedExpr) -> str:
    if e.op == "const":
        return _fmt_const(e.value)
    if e.op in ("z", "w"):
        return f"{e.op}{e.value + 1}"
    if e.op == "pow":
        return f"(pow {_to_text(e.args[0])} {e.value})"
    return "(" + " ".join([e.op] + [_to_text(a) for a in e.args]) + ")"
