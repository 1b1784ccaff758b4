"""Truncated multivariate Taylor arithmetic in (x, y, p).

A jet of order N is stored as an array ``c`` of shape ``(M, *batch)`` where
``M`` is the number of monomials x^i y^j p^k with i+j+k <= N, and
``c[idx(i,j,k)]`` is the Taylor coefficient (derivative divided by
i! j! k!).  Batch dimensions let one compiled expression evaluate many
points at once, which the integrators rely on.

Constants are carried as plain Python floats so that constant subtrees
never allocate arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from . import expr as E
from .errors import DomainError, UnboundParameterError


class Algebra:
    """Monomial bookkeeping for jets of a fixed order in three variables."""

    def __init__(self, order: int):
        if order < 0:
            raise ValueError("order must be non-negative")
        self.order = order
        self.monomials = [
            (i, j, k)
            for deg in range(order + 1)
            for i in range(deg, -1, -1)
            for j in range(deg - i, -1, -1)
            for k in [deg - i - j]
        ]
        self.index = {m: n for n, m in enumerate(self.monomials)}
        self.size = len(self.monomials)
        ia, ib, ic = [], [], []
        for a, ma in enumerate(self.monomials):
            for b, mb in enumerate(self.monomials):
                mc = (ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2])
                if sum(mc) <= order:
                    ia.append(a)
                    ib.append(b)
                    ic.append(self.index[mc])
        self._ia = np.array(ia)
        self._ib = np.array(ib)
        scatter = np.zeros((self.size, len(ia)))
        scatter[ic, np.arange(len(ia))] = 1.0
        self._scatter = scatter
        self.factorials = np.array(
            [math.factorial(i) * math.factorial(j) * math.factorial(k) for i, j, k in self.monomials],
            dtype=float,
        )

    def mul(self, a, b):
        if isinstance(a, float) or isinstance(b, float):
            return a * b
        if self.order <= 1:  # value and gradient: product rule directly
            out = a[0] * b
            out[1:] += a[1:] * b[0]
            return out
        prod = a[self._ia] * b[self._ib]
        tail = prod.shape[1:]
        out = self._scatter @ prod.reshape(prod.shape[0], -1)
        return out.reshape((self.size,) + tail)

    def constant(self, value, like):
        out = np.zeros_like(like)
        out[0] = value
        return out

    def variable(self, which: int, value) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        c = np.zeros((self.size,) + value.shape)
        c[0] = value
        if self.order >= 1:
            unit = [0, 0, 0]
            unit[which] = 1
            c[self.index[tuple(unit)]] = 1.0
        return c

    def compose(self, u, derivs):
        """f(u) from the Taylor coefficients ``derivs[k] = f^(k)(u0)/k!``."""
        h = u.copy()
        h[0] = 0.0
        out = self.constant(derivs[0], u)
        power = None
        for k in range(1, self.order + 1):
            power = h if power is None else self.mul(power, h)
            out = out + derivs[k] * power
        return out


@lru_cache(maxsize=None)
def algebra(order: int) -> Algebra:
    return Algebra(order)


def _series(name: str, c0, order: int, strict: bool):
    """Scaled derivatives f^(k)(c0)/k!, k = 0..order, of a unary function."""
    if name == "exp":
        e = np.exp(c0)
        return [e / math.factorial(k) for k in range(order + 1)]
    if name in ("sin", "cos"):
        s, c = np.sin(c0), np.cos(c0)
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        return [cycle[k % 4] / math.factorial(k) for k in range(order + 1)]
    if name == "ln":
        if strict and np.any(np.asarray(c0) <= 0):
            raise DomainError("ln of a non-positive value")
        with np.errstate(all="ignore"):
            out = [np.log(c0)]
            out += [(-1.0) ** (k + 1) / (k * c0**k) for k in range(1, order + 1)]
        return out
    if name == "recip":
        if strict and np.any(np.asarray(c0) == 0):
            raise DomainError("division by zero")
        with np.errstate(all="ignore"):
            return [(-1.0) ** k / c0 ** (k + 1) for k in range(order + 1)]
    raise ValueError(f"unknown function {name!r}")


_SCALAR_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


def _scalar_func(name: str, v: float, strict: bool) -> float:
    if name == "ln":
        if v <= 0:
            if strict:
                raise DomainError("ln of a non-positive value")
            return math.nan
        return math.log(v)
    return _SCALAR_FUNCS[name](v)


def _pow(alg: Algebra, base, n: int):
    if isinstance(base, float):
        return base**n
    result = None
    square = base
    while n:
        if n & 1:
            result = square if result is None else alg.mul(result, square)
        n >>= 1
        if n:
            square = alg.mul(square, square)
    return 1.0 if result is None else result


def _add(a, b, sign: float = 1.0):
    """a + sign*b where a constant operand shifts only the value coefficient."""
    a_const, b_const = isinstance(a, float), isinstance(b, float)
    if a_const == b_const:
        return a + sign * b
    if a_const:
        out = sign * b
        out[0] += a
        return out
    out = a.copy()
    out[0] += sign * b
    return out


def _div(alg: Algebra, a, b, strict: bool):
    if isinstance(b, float):
        if b == 0.0:
            if strict:
                raise DomainError("division by zero")
            return a * math.nan
        return a / b
    return alg.mul(a, alg.compose(b, _series("recip", b[0], alg.order, strict)))


Seeds = tuple  # (x_jet, y_jet, p_jet)
Program = Callable[[Seeds, bool], object]


def _build(node: E.Node, alg: Algebra, params: Mapping[str, float]) -> Program:
    if isinstance(node, E.Const):
        v = float(node.value)
        return lambda s, strict: v
    if isinstance(node, E.Param):
        if node.name not in params:
            raise UnboundParameterError(f"parameter {node.name!r} has no binding")
        v = float(params[node.name])
        return lambda s, strict: v
    if isinstance(node, E.Var):
        i = E.VARIABLES.index(node.name)
        return lambda s, strict: s[i]
    if isinstance(node, E.Neg):
        f = _build(node.arg, alg, params)
        return lambda s, strict: -f(s, strict)
    if isinstance(node, E.Pow):
        f = _build(node.base, alg, params)
        n = node.exponent
        return lambda s, strict: _pow(alg, f(s, strict), n)
    if isinstance(node, E.Func):
        f = _build(node.arg, alg, params)
        name = node.name

        def func(s, strict):
            u = f(s, strict)
            if isinstance(u, float):
                return _scalar_func(name, u, strict)
            return alg.compose(u, _series(name, u[0], alg.order, strict))

        return func
    if isinstance(node, E.BinOp):
        fa = _build(node.left, alg, params)
        fb = _build(node.right, alg, params)
        op = node.op
        if op == "+":
            return lambda s, strict: _add(fa(s, strict), fb(s, strict))
        if op == "-":
            return lambda s, strict: _add(fa(s, strict), fb(s, strict), -1.0)
        if op == "*":
            return lambda s, strict: alg.mul(fa(s, strict), fb(s, strict))
        if op == "/":
            return lambda s, strict: _div(alg, fa(s, strict), fb(s, strict), strict)
    raise TypeError(f"not an expression node: {node!r}")


class CompiledExpr:
    """An expression tree with bound parameters, ready for jet evaluation."""

    def __init__(self, ast: E.Node, bindings: Mapping[str, float] | None = None):
        self.ast = ast
        self.bindings = dict(bindings or {})
        missing = E.parameters(ast) - set(self.bindings)
        if missing:
            raise UnboundParameterError(f"unbound parameters: {', '.join(sorted(missing))}")
        self._programs: dict[int, Program] = {}

    def program(self, order: int) -> Program:
        if order not in self._programs:
            self._programs[order] = _build(self.ast, algebra(order), self.bindings)
        return self._programs[order]

    def run(self, seeds: Seeds, order: int, strict: bool = False) -> np.ndarray:
        """Evaluate with arbitrary input jets (allows coordinate changes)."""
        out = self.program(order)(seeds, strict)
        if isinstance(out, float):
            out = algebra(order).constant(out, seeds[0])
        return out

    def jet(self, center, order: int = 3, strict: bool = True) -> np.ndarray:
        alg = algebra(order)
        seeds = tuple(alg.variable(i, center[i]) for i in range(3))
        with np.errstate(all="ignore"):
            return self.run(seeds, order, strict)

    def grad(self, x, y, p):
        """Vectorized value and first partials: (F, F_x, F_y, F_p)."""
        alg = algebra(1)
        x, y, p = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, p)))
        with np.errstate(all="ignore"):
            c = self.run((alg.variable(0, x), alg.variable(1, y), alg.variable(2, p)), 1)
        return c[0], c[1], c[2], c[3]

    def value(self, x, y, p):
        alg = algebra(0)
        x, y, p = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, p)))
        with np.errstate(all="ignore"):
            c = self.run((alg.variable(0, x), alg.variable(1, y), alg.variable(2, p)), 0)
        return c[0]


_DERIV_NAMES = {"x": 0, "y": 1, "p": 2}


@dataclass(frozen=True)
class Jet3:
    """Degree-3 Taylor jet of F at ``center``.

    ``coeff[idx(i,j,k)]`` holds d^{i+j+k}F / dx^i dy^j dp^k divided by i! j! k!.
    """

    center: tuple[float, float, float]
    coeff: np.ndarray

    def coef(self, i: int, j: int, k: int) -> float:
        return float(self.coeff[algebra(3).index[(i, j, k)]])

    def partial(self, i: int, j: int, k: int) -> float:
        return self.coef(i, j, k) * math.factorial(i) * math.factorial(j) * math.factorial(k)

    def d(self, spec: str = "") -> float:
        """Partial derivative by variable string, e.g. ``d("xp")`` is F_xp."""
        counts = [0, 0, 0]
        for ch in spec:
            counts[_DERIV_NAMES[ch]] += 1
        return self.partial(*counts)

    @property
    def F(self) -> float:
        return self.coef(0, 0, 0)

    @property
    def F_x(self) -> float:
        return self.d("x")

    @property
    def F_y(self) -> float:
        return self.d("y")

    @property
    def F_p(self) -> float:
        return self.d("p")

    @property
    def F_pp(self) -> float:
        return self.d("pp")

    @property
    def F_ppp(self) -> float:
        return self.d("ppp")

    @property
    def F_xp(self) -> float:
        return self.d("xp")

    @property
    def F_xx(self) -> float:
        return self.d("xx")

    def scaled(self, factor: float) -> "Jet3":
        return Jet3(self.center, self.coeff * factor)

    def as_dict(self) -> dict[tuple[int, int, int], float]:
        return {m: float(v) for m, v in zip(algebra(3).monomials, self.coeff)}


def eval_jet(ast: E.Node, bindings: Mapping[str, float] | None, center) -> Jet3:
    """Degree-3 Taylor jet of the expression at ``center``.

    Raises DomainError for ln of a non-positive value or division by zero
    at the center, and when any coefficient comes out non-finite.
    """
    center = tuple(float(v) for v in center)
    if not all(math.isfinite(v) for v in center):
        raise DomainError("center must be finite")
    coeff = CompiledExpr(ast, bindings).jet(center, 3, strict=True)
    if not np.all(np.isfinite(coeff)):
        raise DomainError(f"non-finite jet coefficient at {center}")
    return Jet3(center, np.asarray(coeff, dtype=float))
