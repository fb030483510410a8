"""Functions on [a, b] as Chebyshev interpolants, and their Holder norms.

A GridFunction is matrix- or vector-valued and carries node values at
Chebyshev-Gauss-Lobatto points.  When an entry originated from a symbolic
expression, the expression is kept so that derivatives and off-grid
evaluation are exact; otherwise derivatives fall back to spectral
differentiation and off-grid evaluation to barycentric interpolation.

Norm convention: the norm of a vector/matrix-valued function is the sum
of the scalar norms of its entries.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import chebyshev as cheb
from . import expr as ex

MAX_PRODUCT_DEGREE = 512
NUDGE_FRACTION = 1e-12


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class HolderIndex:
    """Index pair (n, alpha) of the space C^{n,alpha}."""
    n: int
    alpha: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"smoothness order must be >= 0, got {self.n}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class NormValue:
    """Holder norm split into derivative sup-norms and the seminorm."""
    sup_parts: tuple
    seminorm: float
    total: float


@lru_cache(maxsize=64)
def _grid_data(N: int, a: float, b: float):
    nodes = cheb.lobatto_nodes(N, a, b)
    D = cheb.diff_matrix(nodes)
    return nodes, D


def _nudge(ts: np.ndarray, centers, a: float, b: float) -> np.ndarray:
    """Shift sample points off powabs singularities by 1e-12*(b-a)."""
    if not centers:
        return ts
    delta = NUDGE_FRACTION * (b - a)
    ts = np.array(ts, dtype=float)
    for c in centers:
        hit = np.abs(ts - c) < delta
        if np.any(hit):
            ts[hit] = c + delta if c + delta <= b else c - delta
    return ts


def _eval_exprs(sources: np.ndarray, ts: np.ndarray, eps: float,
                a: float, b: float) -> np.ndarray:
    out = np.empty(sources.shape + (len(ts),), dtype=complex)
    for idx in np.ndindex(sources.shape):
        e = sources[idx]
        pts = _nudge(ts, ex.singular_centers(e, eps), a, b)
        out[idx] = ex.evaluate(e, pts, eps)
    return out


class GridFunction:
    """Immutable interpolant of shape (rows, cols) on [a, b]."""

    def __init__(self, values: np.ndarray, interval, sources=None,
                 eps: float = 0.0):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 3:
            raise ShapeError("values must have shape (rows, cols, N+1)")
        self.a, self.b = float(interval[0]), float(interval[1])
        if not self.a < self.b:
            raise ValueError("interval must satisfy a < b")
        self.values = values
        self.shape = values.shape[:2]
        self.N = values.shape[2] - 1
        self.sources = sources
        self.eps = float(eps)
        self._deriv = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_exprs(cls, exprs, interval, N: int, eps: float = 0.0,
                   shape=None) -> "GridFunction":
        if N < 8:
            raise ValueError(f"degree must be >= 8, got {N}")
        srcs = np.asarray(exprs, dtype=object)
        if srcs.ndim == 0:
            srcs = srcs.reshape(1, 1)
        elif srcs.ndim == 1:
            srcs = srcs.reshape(-1, 1)
        if shape is not None and srcs.shape != tuple(shape):
            raise ShapeError(f"expected shape {shape}, got {srcs.shape}")
        a, b = float(interval[0]), float(interval[1])
        nodes, _ = _grid_data(N, a, b)
        values = _eval_exprs(srcs, nodes, eps, a, b)
        return cls(values, (a, b), sources=srcs, eps=eps)

    @property
    def interval(self):
        return (self.a, self.b)

    @property
    def nodes(self) -> np.ndarray:
        return _grid_data(self.N, self.a, self.b)[0]

    @property
    def diffmat(self) -> np.ndarray:
        return _grid_data(self.N, self.a, self.b)[1]

    # -- evaluation ----------------------------------------------------------

    def eval_at(self, ts) -> np.ndarray:
        """Values at arbitrary points, shape (rows, cols, len(ts))."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.sources is not None:
            return _eval_exprs(self.sources, ts, self.eps, self.a, self.b)
        E = cheb.bary_matrix(self.nodes, ts)
        return self.values @ E.T

    def __call__(self, t):
        return self.eval_at([t])[..., 0]

    def resample(self, N: int) -> "GridFunction":
        if N == self.N:
            return self
        nodes, _ = _grid_data(N, self.a, self.b)
        if self.sources is not None:
            return GridFunction(self.eval_at(nodes), self.interval,
                                sources=self.sources, eps=self.eps)
        return GridFunction(self.eval_at(nodes), self.interval)

    # -- calculus ------------------------------------------------------------

    def derivative(self, k: int = 1) -> "GridFunction":
        """k-th derivative; symbolic when sources are known, else spectral."""
        if k == 0:
            return self
        if self._deriv is None:
            if self.sources is not None:
                dsrc = np.empty(self.sources.shape, dtype=object)
                for idx in np.ndindex(self.sources.shape):
                    dsrc[idx] = ex.diff_t(self.sources[idx])
                d = GridFunction.from_exprs(dsrc, self.interval, self.N,
                                            eps=self.eps)
            else:
                d = GridFunction(self.values @ self.diffmat.T, self.interval)
            self._deriv = d
        return self._deriv.derivative(k - 1)

    # -- arithmetic ------------------------------------------------------------

    def _binary(self, other: "GridFunction", op, sym):
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")
        if (self.a, self.b) != (other.a, other.b):
            raise ValueError("interval mismatch")
        N = max(self.N, other.N)
        f, g = self.resample(N), other.resample(N)
        sources = None
        if (self.sources is not None and other.sources is not None
                and self.eps == other.eps):
            sources = np.empty(self.sources.shape, dtype=object)
            for idx in np.ndindex(self.sources.shape):
                sources[idx] = sym(self.sources[idx], other.sources[idx])
        return GridFunction(op(f.values, g.values), self.interval,
                            sources=sources, eps=self.eps)

    def __add__(self, other):
        return self._binary(other, np.add, ex.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract, ex.sub)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c) -> "GridFunction":
        sources = None
        if self.sources is not None:
            sources = np.empty(self.sources.shape, dtype=object)
            for idx in np.ndindex(self.sources.shape):
                sources[idx] = ex.mul(ex.Const(complex(c)), self.sources[idx])
        return GridFunction(self.values * c, self.interval,
                            sources=sources, eps=self.eps)

    def block(self, rows, cols=slice(None)) -> "GridFunction":
        return GridFunction(self.values[rows, cols], self.interval)

    def entry(self, i: int, j: int = 0) -> "GridFunction":
        src = None
        if self.sources is not None:
            src = self.sources[i:i + 1, j:j + 1]
        return GridFunction(self.values[i:i + 1, j:j + 1], self.interval,
                            sources=src, eps=self.eps)


def interpolate(e, interval, N: int, shape=None, eps: float = 0.0) -> GridFunction:
    """Build a GridFunction from expressions, strings, or sample values."""
    if isinstance(e, str):
        e = ex.parse_expression(e)
    if isinstance(e, ex.Expr):
        return GridFunction.from_exprs(e, interval, N, eps=eps, shape=shape)
    arr = np.asarray(e)
    if arr.dtype == object or (arr.size and isinstance(arr.flat[0], (str, ex.Expr))):
        parsed = np.empty(arr.shape, dtype=object)
        for idx in np.ndindex(arr.shape):
            v = arr[idx]
            parsed[idx] = ex.parse_expression(v) if isinstance(v, str) else v
        return GridFunction.from_exprs(parsed, interval, N, eps=eps, shape=shape)
    values = np.asarray(e, dtype=complex)
    if values.ndim == 1:
        values = values.reshape(1, 1, -1)
    return GridFunction(values, interval)


def differentiate(g: GridFunction) -> GridFunction:
    return g.derivative(1)


def product(f: GridFunction, g: GridFunction) -> GridFunction:
    """Pointwise matrix product, interpolated at degree N_f + N_g (capped).

    A (1,1)-shaped operand acts as a scalar factor.
    """
    if (f.a, f.b) != (g.a, g.b):
        raise ValueError("interval mismatch")
    scalar_f = f.shape == (1, 1)
    scalar_g = g.shape == (1, 1)
    if not (scalar_f or scalar_g) and f.shape[1] != g.shape[0]:
        raise ShapeError(f"shapes {f.shape} and {g.shape} not composable")
    N = f.N + g.N
    if N > MAX_PRODUCT_DEGREE:
        warnings.warn(f"product degree {N} capped at {MAX_PRODUCT_DEGREE}")
        N = MAX_PRODUCT_DEGREE
    nodes, _ = _grid_data(N, f.a, f.b)
    fv = f.eval_at(nodes)
    gv = g.eval_at(nodes)
    if scalar_f:
        vals = fv[0, 0] * gv
    elif scalar_g:
        vals = fv * gv[0, 0]
    else:
        vals = np.einsum("ikt,kjt->ijt", fv, gv)
    return GridFunction(vals, f.interval)


def _sample_points(g: GridFunction, M: int, include_nodes: bool = False):
    ts = g.a + (g.b - g.a) * np.arange(M + 1) / M
    if include_nodes:
        ts = np.unique(np.concatenate([ts, g.nodes]))
        # drop near-coincident points: pairs separated by ~eps_machine
        # turn interpolation roundoff into spurious difference quotients
        gap = 1e-9 * (g.b - g.a)
        keep = np.concatenate([[True], np.diff(ts) > gap])
        ts = ts[keep]
    return ts


def sup_norm(g: GridFunction, M: int = 1024) -> float:
    """Entrywise-sum of max absolute values over M+1 uniform samples."""
    if M < g.N + 1:
        raise ValueError(f"sampling count {M} below degree {g.N}")
    vals = g.eval_at(_sample_points(g, M))
    return float(np.sum(np.max(np.abs(vals), axis=-1)))


def _pair_max(vals: np.ndarray, ts: np.ndarray, alpha: float) -> float:
    best = 0.0
    block = 1024
    P = len(ts)
    for lo in range(0, P, block):
        dv = np.abs(vals[lo:lo + block, None] - vals[None, :])
        dt = np.abs(ts[lo:lo + block, None] - ts[None, :])
        mask = dt > 0
        np.power(dt, alpha, out=dt, where=mask)
        ratio = np.divide(dv, dt, out=np.zeros_like(dv), where=mask)
        m = float(ratio.max()) if ratio.size else 0.0
        best = max(best, m)
    return best


def holder_seminorm(g: GridFunction, idx: HolderIndex, M: int = 1024,
                    check_refinement: bool = False):
    """Entrywise-sum sup of |g^(n)(t2)-g^(n)(t1)| / |t2-t1|^alpha.

    Maximized exhaustively over M+1 uniform samples plus the Chebyshev
    nodes, giving a certified lower bound of the true seminorm.  With
    check_refinement=True, also returns False when doubling M still moves
    the value by more than 0.1%.
    """
    if M < 64:
        raise ValueError(f"sampling count {M} below 64")
    gn = g.derivative(idx.n)
    ts = _sample_points(g, M, include_nodes=True)
    vals = gn.eval_at(ts)
    total = 0.0
    for i, j in np.ndindex(g.shape):
        total += _pair_max(vals[i, j], ts, idx.alpha)
    if not check_refinement:
        return total
    finer = holder_seminorm(g, idx, 2 * M)
    converged = abs(finer - total) <= 1e-3 * max(finer, 1e-300)
    return total, converged


def holder_norm(g: GridFunction, idx: HolderIndex, M: int = 1024) -> NormValue:
    """Sum of derivative sup-norms j=0..n plus the Holder seminorm."""
    sup_parts = tuple(sup_norm(g.derivative(j), M) for j in range(idx.n + 1))
    semi = holder_seminorm(g, idx, M)
    return NormValue(sup_parts, semi, float(sum(sup_parts) + semi))


def algebra_constant(idx: HolderIndex) -> float:
    """Certified submultiplicativity constant for the scalar norm."""
    return 2.0 ** (idx.n + 1) * (idx.n + 1) ** 2
