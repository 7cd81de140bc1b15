"""Underlying norms on the finite-dimensional space E.

Two families are supported: weighted ``l_r`` norms and polytope norms
``||x|| = max_k |<g_k, x>|`` given by an explicit list of dual vertices (the
gauge of the dual polytope is computed by linear programming).  Each norm
knows its dual and, when its unit ball is a polytope, the ball's vertices.

:func:`ball_sup` brackets ``sup {F(x) : ||x|| <= 1}`` for a convex, absolutely
homogeneous ``F``.  Polytope balls are exact (vertex enumeration); in
dimensions 2 and 3 the sphere is covered by cones over small simplices and
the vertex maximum is inflated by the chord-norm deficit; in higher
dimensions the ball is sandwiched between scaled l_1 / l_inf polytopes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .lpcore import NormEstimate, conjugate

MAX_VERTICES = 4096
NET_2D = 256
NET_3D = 10
MAX_CELLS = 20000
REFINE_ROUNDS = 40
CONE_RTOL = 1e-9


class UnderlyingNorm:
    dim: int

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def dual(self) -> "UnderlyingNorm":
        raise NotImplementedError

    def vertices(self) -> np.ndarray | None:
        """Extreme points of the unit ball (all of them), or ``None``."""
        return None

    def norming(self, x) -> np.ndarray:
        """A dual-unit vector ``g`` with ``<g, x> = ||x||``."""
        raise NotImplementedError

    def outer_polytopes(self) -> list[tuple[float, np.ndarray]]:
        """Pairs ``(c, V)``: the unit ball sits inside ``c * conv(V)``."""
        return []

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class WeightedLr(UnderlyingNorm):
    """``(sum_i c_i |x_i|^r)^(1/r)``; ``r = inf`` gives ``max_i c_i |x_i|``."""

    r: float
    dim: int
    weights: tuple | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        c = np.ones(self.dim) if self.weights is None else np.asarray(self.weights, dtype=float)
        if c.shape != (self.dim,) or np.any(c <= 0):
            raise ValueError("weights must be positive, one per coordinate")
        object.__setattr__(self, "weights", tuple(c.tolist()))

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.weights)

    def __call__(self, x):
        a = np.abs(np.asarray(x, dtype=float))
        c = self.c
        if np.isinf(self.r):
            return (c * a).max(axis=-1, initial=0.0)
        if self.r == 1:
            return (c * a).sum(axis=-1)
        m = a.max(axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        return (c * (a / safe) ** self.r).sum(axis=-1) ** (1 / self.r) * np.where(m > 0, m, 0.0)[..., 0]

    def dual(self) -> "WeightedLr":
        c = self.c
        if self.r == 1:
            return WeightedLr(np.inf, self.dim, tuple(1 / c))
        if np.isinf(self.r):
            return WeightedLr(1.0, self.dim, tuple(1 / c))
        s = conjugate(self.r)
        return WeightedLr(s, self.dim, tuple(c ** (1 - s)))

    def vertices(self):
        c = self.c
        if self.r == 1:
            e = np.diag(1 / c)
            return np.vstack([e, -e])
        if np.isinf(self.r) and 2**self.dim <= MAX_VERTICES:
            signs = np.array(list(itertools.product([1.0, -1.0], repeat=self.dim)))
            return signs / c
        return None

    def norming(self, x):
        x = np.asarray(x, dtype=float)
        c = self.c
        n = self(x)
        if n == 0:
            return np.zeros(self.dim)
        if self.r == 1:
            return c * np.sign(x)
        if np.isinf(self.r):
            g = np.zeros(self.dim)
            i = int(np.argmax(c * np.abs(x)))
            g[i] = c[i] * np.sign(x[i])
            return g
        return c * np.sign(x) * (np.abs(x) / n) ** (self.r - 1)

    def outer_polytopes(self):
        n = self.dim
        if self.r == 1 or np.isinf(self.r):
            return []
        root = self.c ** (1 / self.r)
        out = []
        # ||x||_{1, root} <= n^(1 - 1/r) ||x||_r
        e = np.diag(1 / root)
        out.append((n ** (1 - 1 / self.r), np.vstack([e, -e])))
        # max root_i |x_i| <= ||x||_r
        if 2**n <= MAX_VERTICES:
            signs = np.array(list(itertools.product([1.0, -1.0], repeat=n)))
            out.append((1.0, signs / root))
        return out

    def to_dict(self):
        return {"type": "lr", "r": "inf" if np.isinf(self.r) else self.r, "dim": self.dim, "weights": list(self.weights)}


@dataclass(frozen=True, eq=False)
class PolytopeNorm(UnderlyingNorm):
    """``||x|| = max_k |<g_k, x>|`` for dual vertices ``g_k`` spanning the dual space."""

    functionals: tuple

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.functionals, dtype=float))
        if np.linalg.matrix_rank(g) < g.shape[1]:
            raise ValueError("polytope functionals must span the dual space")
        object.__setattr__(self, "functionals", tuple(map(tuple, g)))

    @property
    def G(self) -> np.ndarray:
        return np.asarray(self.functionals)

    @property
    def dim(self):
        return self.G.shape[1]

    def __call__(self, x):
        return np.abs(np.asarray(x, dtype=float) @ self.G.T).max(axis=-1)

    def dual(self):
        return PolytopeGauge(self.functionals)

    def norming(self, x):
        vals = self.G @ np.asarray(x, dtype=float)
        k = int(np.argmax(np.abs(vals)))
        return np.sign(vals[k]) * self.G[k] if vals[k] != 0 else np.zeros(self.dim)

    def to_dict(self):
        return {"type": "polytope", "functionals": [list(r) for r in self.functionals]}


@dataclass(frozen=True, eq=False)
class PolytopeGauge(UnderlyingNorm):
    """Gauge of ``conv(+-v_k)``; the dual of :class:`PolytopeNorm`."""

    points: tuple

    @property
    def V(self):
        return np.atleast_2d(np.asarray(self.points, dtype=float))

    @property
    def dim(self):
        return self.V.shape[1]

    def _one(self, x):
        V = self.V
        k = V.shape[0]
        res = linprog(
            np.ones(2 * k),
            A_eq=np.hstack([V.T, -V.T]),
            b_eq=x,
            bounds=[(0, None)] * (2 * k),
            method="highs",
        )
        if not res.success:
            raise ValueError("polytope gauge LP failed")
        return res.fun

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(self._one(x))
        return np.array([self._one(r) for r in x.reshape(-1, self.dim)]).reshape(x.shape[:-1])

    def dual(self):
        return PolytopeNorm(self.points)

    def vertices(self):
        return np.vstack([self.V, -self.V])

    def norming(self, x):
        # a maximizing functional over the dual ball is found by LP duality
        V = self.V
        res = linprog(
            -np.asarray(x, dtype=float),
            A_ub=np.vstack([V, -V]),
            b_ub=np.ones(2 * V.shape[0]),
            bounds=[(None, None)] * self.dim,
            method="highs",
        )
        return res.x

    def to_dict(self):
        return {"type": "polytope-gauge", "points": [list(r) for r in self.points]}


def norm_from_dict(d: dict) -> UnderlyingNorm:
    t = d.get("type", "lr")
    if t == "lr":
        r = d["r"]
        r = np.inf if r in ("inf", "infinity", float("inf")) else float(r)
        return WeightedLr(r, int(d["dim"]), tuple(d["weights"]) if d.get("weights") is not None else None)
    if t == "polytope":
        return PolytopeNorm(tuple(map(tuple, d["functionals"])))
    if t == "polytope-gauge":
        return PolytopeGauge(tuple(map(tuple, d["points"])))
    raise ValueError(f"unknown norm type {t!r}")


def _sphere_points(norm: UnderlyingNorm, dirs: np.ndarray) -> np.ndarray:
    n = norm(dirs)
    return dirs / n[:, None]


def _net_2d(norm: UnderlyingNorm, k: int):
    th = np.linspace(0.0, np.pi, k + 1)
    pts = _sphere_points(norm, np.stack([np.cos(th), np.sin(th)], axis=1))
    # consecutive pairs cover the upper half circle; symmetry gives the rest
    edges = np.stack([np.arange(k), np.arange(1, k + 1)], axis=1)
    return pts, edges


def _net_3d(norm: UnderlyingNorm, m: int):
    pts, idx = [], {}

    def vid(v):
        key = tuple(np.round(v, 12))
        if key not in idx:
            idx[key] = len(pts)
            pts.append(v)
        return idx[key]

    tris = []
    e = np.eye(3)
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            A, B, C = sx * e[0], sy * e[1], e[2]  # upper hemisphere faces suffice
            for i in range(m):
                for j in range(m - i):
                    p0 = A + (B - A) * i / m + (C - A) * j / m
                    p1 = A + (B - A) * (i + 1) / m + (C - A) * j / m
                    p2 = A + (B - A) * i / m + (C - A) * (j + 1) / m
                    tris.append((vid(p0), vid(p1), vid(p2)))
                    if j < m - i - 1:
                        p3 = A + (B - A) * (i + 1) / m + (C - A) * (j + 1) / m
                        tris.append((vid(p1), vid(p3), vid(p2)))
    P = np.array(pts)
    return _sphere_points(norm, P), np.array(tris)


def _cell_bound(F, norm, cells):
    K, k, n = cells.shape
    vals = F(cells.reshape(-1, n)).reshape(K, k)
    diam = np.zeros(K)
    for i in range(k):
        for j in range(i + 1, k):
            diam = np.maximum(diam, norm(cells[:, i] - cells[:, j]))
    # a point of the simplex is within (1 - 1/k) * diam of its heaviest vertex
    deficit = 1.0 - (1.0 - 1.0 / k) * diam
    support = _support_floor(norm, cells)
    if support is not None:
        deficit = np.maximum(deficit, support)
    with np.errstate(divide="ignore"):
        bound = np.where(deficit > 0, vals.max(axis=1) / np.where(deficit > 0, deficit, 1.0), np.inf)
    return vals, bound


def _support_floor(norm, cells):
    """Lower bound for the norm on the hull of each cell.

    The norming functional ``g`` of the centroid has dual norm one, so every
    hull point ``y`` has ``||y|| >= <g, y> >= min_i <g, v_i>``.  For smooth
    norms this is second order in the cell diameter.
    """
    if not isinstance(norm, WeightedLr) or norm.r == 1 or np.isinf(norm.r):
        return None
    m = cells.mean(axis=1)
    nm = norm(m)
    ok = nm > 0
    g = np.zeros_like(m)
    a = np.abs(m[ok]) / nm[ok][:, None]
    g[ok] = norm.c * np.sign(m[ok]) * a ** (norm.r - 1)
    s = np.einsum("kn,kin->ki", g, cells).min(axis=1)
    # a little slack for rounding in the inner products
    return np.where(ok, s - 1e-14, -np.inf)


def _split(norm, cells):
    n = cells.shape[2]
    if cells.shape[1] == 2:
        a, b = cells[:, 0], cells[:, 1]
        m = a + b
        m = m / norm(m)[:, None]
        return np.concatenate([np.stack([a, m], 1), np.stack([m, b], 1)])
    a, b, c = cells[:, 0], cells[:, 1], cells[:, 2]
    mids = []
    for x, y in ((a, b), (b, c), (a, c)):
        m = x + y
        mids.append(m / norm(m)[:, None])
    ab, bc, ac = mids
    return np.concatenate(
        [np.stack(t, 1) for t in ((a, ab, ac), (ab, b, bc), (ac, bc, c), (ab, bc, ac))]
    )


def _adaptive_cones(F, norm, n):
    if n == 2:
        pts, edges = _net_2d(norm, NET_2D)
    else:
        pts, edges = _net_3d(norm, NET_3D)
    cells = pts[edges]
    lower, dropped = 0.0, 0.0
    for _ in range(REFINE_ROUNDS):
        vals, bound = _cell_bound(F, norm, cells)
        lower = max(lower, float(vals.max()))
        if bound.max() <= lower * (1 + CONE_RTOL):
            return lower, max(lower, dropped, float(bound.max()))
        live = bound > lower * (1 + 1e-13) + 1e-300
        cells, bound = cells[live], bound[live]
        if len(cells) * (2 if n == 2 else 4) > MAX_CELLS:
            order = np.argsort(-bound)
            keep = MAX_CELLS // (2 if n == 2 else 4)
            dropped = max(dropped, float(bound[order[keep:]].max()) if len(order) > keep else 0.0)
            cells, bound = cells[order[:keep]], bound[order[:keep]]
        if len(cells) and not np.all(np.isfinite(bound)) and n == 3 and len(cells) > MAX_CELLS // 4:
            return None
        cells = _split(norm, cells)
    vals, bound = _cell_bound(F, norm, cells)
    lower = max(lower, float(vals.max()))
    up = max(lower, dropped, float(bound.max()))
    if not np.isfinite(up):
        return None
    return lower, up


def ball_sup(
    F: Callable[[np.ndarray], np.ndarray],
    norm: UnderlyingNorm,
    extra_points: np.ndarray | None = None,
) -> NormEstimate:
    """Bracket ``sup {F(x) : norm(x) <= 1}``; ``F`` maps ``(K, n)`` to ``(K,)``.

    ``F`` must be convex and absolutely homogeneous.  ``extra_points`` (any
    non-zero vectors) only improve the lower bound.
    """
    n = norm.dim
    lower = 0.0
    if extra_points is not None and len(extra_points):
        ep = np.atleast_2d(extra_points)
        nn = norm(ep)
        ok = nn > 0
        if np.any(ok):
            lower = float(np.max(F(ep[ok] / nn[ok][:, None])))
    V = norm.vertices()
    if V is not None:
        val = float(np.max(F(V)))
        return NormEstimate(min(max(lower, val), val), val, ("exact-vertex",))
    if n == 1:
        val = float(F(np.array([[1.0]]))[0] / norm(np.array([1.0])))
        return NormEstimate.exact(val, "exact-1d")
    if n in (2, 3):
        res = _adaptive_cones(F, norm, n)
        if res is not None:
            lo, up = res
            lower = max(lower, lo)
            return NormEstimate(min(lower, up), up, (f"cone-net-{n}d",))
    ups = []
    for c, W in norm.outer_polytopes():
        ups.append(c * float(np.max(F(W))))
    upper = min(ups) if ups else np.inf
    probe = np.random.default_rng(0).standard_normal((256, n))
    lower = max(lower, float(np.max(F(_sphere_points(norm, probe)))))
    return NormEstimate(min(lower, upper), upper, ("outer-polytope",))


def underlying_operator_norm(phi, enorm: UnderlyingNorm, fnorm: UnderlyingNorm) -> NormEstimate:
    """Bracket ``||phi||`` for ``phi: (E, enorm) -> (F, fnorm)`` (matrix ``dimF x dimE``)."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (fnorm.dim, enorm.dim):
        raise ValueError("shape mismatch between map and norms")
    if not np.any(phi):
        return NormEstimate.exact(0.0, "zero")
    fd, ed = fnorm.dual(), enorm.dual()
    primal = ball_sup(lambda X: fnorm(X @ phi.T), enorm)
    dual = ball_sup(lambda G: ed(G @ phi), fd)
    lo = max(primal.lower, dual.lower)
    up = min(primal.upper, dual.upper)
    return NormEstimate(min(lo, up), up, primal.method_tags + dual.method_tags)
