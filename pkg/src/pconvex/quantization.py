"""Amplifications ``L (x) E`` with their quantized norms.

An element ``u`` of ``LE`` is stored as a ``(dim L, dim E)`` array: row ``i``
is the E-coefficient of the coordinate vector ``e_i`` (value 1 at ``i``).  The
host :class:`QuantizedSpace` decides how ``u`` is normed:

``min``
    injective norm, ``sup |<f (x) g, u>|`` over unit ``f in L*``, ``g in E*``.
``max``
    projective norm, ``inf sum ||xi_k|| ||x_k||`` over decompositions.
``vector_valued``
    the Bochner norm of ``L_p(X, E)``.
``standard_extension``
    l_p-sum over the copies of a copied base of an inner host's norm.
``induced``
    ``||u|| = ||J u||`` in a structure living on a copied base.
``pconvex_tensor``
    the p-convex tensor norm on ``E (x) F`` (see :mod:`pconvex.tensor`).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .banach import UnderlyingNorm, WeightedLr, ball_sup, underlying_operator_norm
from .lpcore import (
    LpFunctional,
    LpOperator,
    LpVector,
    NormEstimate,
    conjugate,
    merge_estimates,
    weighted_norm,
)
from .measure import CopiedSpace, Space
from .report import CheckReport

KINDS = ("min", "max", "vector_valued", "standard_extension", "induced", "pconvex_tensor")
TOL_CHECK = 1e-6


class UnsupportedKindError(ValueError):
    pass


class DiamondOverflowError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantizedSpace:
    base: Space
    p: float
    kind: str
    enorm: UnderlyingNorm | None = None
    inner: "QuantizedSpace | None" = None
    structure: "QuantizedSpace | None" = None
    tensor: Any = None
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedKindError(f"unknown quantization kind {self.kind!r}")
        if self.p < 1 or np.isinf(self.p):
            raise ValueError("p must lie in [1, inf)")
        if self.kind in ("min", "max", "vector_valued") and self.enorm is None:
            raise ValueError(f"{self.kind} quantization needs an underlying norm")

    @property
    def underlying_dim(self) -> int:
        if self.kind == "pconvex_tensor":
            return self.tensor.hostE.underlying_dim * self.tensor.hostF.underlying_dim
        if self.enorm is not None:
            return self.enorm.dim
        return (self.inner or self.structure).underlying_dim

    @property
    def shape(self) -> tuple[int, int]:
        return (self.base.dim, self.underlying_dim)

    @property
    def root_kind(self) -> str:
        """Kind after peeling standard extensions and inductions."""
        if self.kind == "standard_extension":
            return self.inner.root_kind
        if self.kind == "induced":
            return self.structure.root_kind
        return self.kind

    def norm(self, coef) -> NormEstimate:
        u = AmplifiedElement(self, coef)
        if self.kind in ("min", "max"):
            return _cached_norm(self, u.coef.tobytes())
        return amplified_norm(u)

    def element(self, coef) -> "AmplifiedElement":
        return AmplifiedElement(self, coef)

    def elementary(self, xi, x) -> "AmplifiedElement":
        return AmplifiedElement(self, np.outer(np.asarray(xi), np.asarray(x)))

    def underlying_norm(self, x) -> float:
        """Norm of ``x`` in the underlying space: ``||xi (x) x||`` for a unit ``xi``."""
        if self.enorm is not None and self.kind != "pconvex_tensor":
            return float(self.enorm(np.asarray(x, dtype=float)))
        xi = np.zeros(self.base.dim)
        xi[0] = self.base.weights[0] ** (-1.0 / self.p)
        return self.norm(np.outer(xi, x)).upper

    def describe(self) -> dict:
        d = {"kind": self.kind, "p": self.p, "base_dim": self.base.dim}
        if self.enorm is not None:
            d["norm"] = self.enorm.to_dict()
        if self.inner is not None:
            d["inner"] = self.inner.describe()
        if self.structure is not None:
            d["structure"] = self.structure.describe()
        if isinstance(self.base, CopiedSpace):
            d["copies"] = self.base.copies
        return d


@functools.lru_cache(maxsize=8192)
def _cached_norm(host: QuantizedSpace, raw: bytes) -> NormEstimate:
    # searches re-norm the same terms many times
    return amplified_norm(AmplifiedElement(host, np.frombuffer(raw).reshape(host.shape)))


def min_space(base: Space, p: float, enorm: UnderlyingNorm, **kw) -> QuantizedSpace:
    return QuantizedSpace(base, p, "min", enorm, **kw)


def max_space(base: Space, p: float, enorm: UnderlyingNorm, **kw) -> QuantizedSpace:
    return QuantizedSpace(base, p, "max", enorm, **kw)


def vector_valued(base: Space, p: float, enorm: UnderlyingNorm, **kw) -> QuantizedSpace:
    return QuantizedSpace(base, p, "vector_valued", enorm, **kw)


def scalar_space(base: Space, p: float) -> QuantizedSpace:
    """The unique quantization of the scalar field (``L C = L``)."""
    return QuantizedSpace(base, p, "min", WeightedLr(1.0, 1))


def standard_extension(inner: QuantizedSpace, copies: int) -> QuantizedSpace:
    return QuantizedSpace(CopiedSpace(inner.base, copies), inner.p, "standard_extension", inner.enorm, inner=inner)


def induced(structure: QuantizedSpace) -> QuantizedSpace:
    """Norm on ``LE`` pulled back along ``J`` from a structure on copies of ``L``."""
    if not isinstance(structure.base, CopiedSpace):
        raise ValueError("induced structures live on a copied space")
    return QuantizedSpace(structure.base.base, structure.p, "induced", structure.enorm, structure=structure)


@dataclass(frozen=True, eq=False)
class AmplifiedElement:
    host: QuantizedSpace
    coef: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=float)
        if c.ndim == 1 and self.host.underlying_dim == 1:
            c = c[:, None]
        if c.shape != self.host.shape:
            raise ValueError(f"shape mismatch: element {c.shape} vs host {self.host.shape}")
        object.__setattr__(self, "coef", c)

    def norm(self) -> NormEstimate:
        return amplified_norm(self)

    def support(self) -> list[int]:
        """Coordinates of the smallest proper projection supporting the element."""
        return [int(i) for i in np.flatnonzero(np.any(self.coef != 0, axis=1))]

    def __add__(self, other):
        if other.host is not self.host:
            raise ValueError("elements live in different hosts")
        return AmplifiedElement(self.host, self.coef + other.coef)

    def __mul__(self, lam):
        return AmplifiedElement(self.host, lam * self.coef)

    __rmul__ = __mul__


# -- norms -----------------------------------------------------------------


def vv_norm(coef, weights, p, enorm) -> float:
    coef = np.asarray(coef, dtype=float)
    return float(weighted_norm(enorm(coef), weights, p))


def _lq_norm(weights, q) -> WeightedLr:
    d = len(weights)
    if np.isinf(q):
        return WeightedLr(np.inf, d)
    return WeightedLr(q, d, tuple(np.asarray(weights, dtype=float)))


def _min_alternating(coef, w, p, enorm, restarts, seed):
    """Lower bound for the injective norm by alternating maximization."""
    d, n = coef.shape
    ed = enorm.dual()
    best = 0.0
    starts = [np.eye(n)[j] for j in range(n)]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    starts += list(rng.standard_normal((restarts, n)))
    for g in starts:
        ng = float(ed(g))
        if ng == 0:
            continue
        g = g / ng
        prev = -1.0
        for _ in range(60):
            y = coef @ g
            ny = float(weighted_norm(y, w, p))
            if ny == 0:
                break
            f = np.sign(y) * (np.abs(y) / ny) ** (p - 1)
            h = (w * f) @ coef
            val = float(enorm(h))
            best = max(best, val, ny)
            if val <= prev * (1 + 1e-14):
                break
            prev = val
            g = enorm.norming(h)
            ng = float(ed(g))
            if ng == 0:
                break
            g = g / ng
    return best


def _rank_one(coef, tol=1e-14):
    """``(xi, x)`` with ``coef = outer(xi, x)`` up to roundoff, else ``None``."""
    i = int(np.argmax(np.abs(coef).max(axis=1)))
    x = coef[i] / np.linalg.norm(coef[i])
    xi = coef @ x
    if np.abs(coef - np.outer(xi, x)).max() > tol * np.abs(coef).max():
        return None
    return xi, x


def _cross_value(coef, w, p, enorm):
    # every reasonable cross norm agrees on elementary tensors
    split = _rank_one(coef)
    if split is None:
        return None
    xi, x = split
    return NormEstimate.exact(float(weighted_norm(xi, w, p) * enorm(x)), "exact-rank-one")


def min_norm(coef, weights, p, enorm, restarts=8, seed=0) -> NormEstimate:
    """Bracket the injective norm of ``coef`` in ``L_p(weights) (x)_eps E``."""
    coef = np.asarray(coef, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not np.any(coef):
        return NormEstimate.exact(0.0, "zero")
    if p == 2 and isinstance(enorm, WeightedLr) and enorm.r == 2:
        # Hilbert-Hilbert: the operator norm of the whitened matrix
        B = np.sqrt(w)[:, None] * coef * np.sqrt(enorm.c)[None, :]
        return NormEstimate.exact(float(np.linalg.norm(B, 2)), "exact-spectral")
    if (est := _cross_value(coef, w, p, enorm)) is not None:
        return est
    vv = vv_norm(coef, w, p, enorm)
    ests = [NormEstimate(0.0, vv, ("vv-upper",))]
    by_g = ball_sup(lambda G: weighted_norm(G @ coef.T, w, p), enorm.dual())
    ests.append(by_g)
    if by_g.width > 1e-7 * by_g.upper:
        q = conjugate(p)
        ests.append(ball_sup(lambda Fm: enorm((Fm * w) @ coef), _lq_norm(w, q)))
    est = merge_estimates(*ests)
    if not est.is_exact:
        lo = _min_alternating(coef, w, p, enorm, restarts, seed)
        est = merge_estimates(est, NormEstimate(min(lo, est.upper), est.upper, ("alternating",)))
    return est


def _decomposition_costs(coef, w, p, enorm) -> dict:
    d, n = coef.shape
    out = {}
    rows = enorm(coef)
    out["rows"] = float(np.sum(w ** (1 / p) * rows))
    E = np.eye(n)
    out["columns"] = float(np.sum(weighted_norm(coef.T, w, p) * enorm(E)))
    B = (w ** (1 / p))[:, None] * coef
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    xi = (w ** (-1 / p))[:, None] * U
    out["svd"] = float(np.sum(s * weighted_norm(xi.T, w, p) * enorm(Vt)))
    return out


def max_norm(coef, weights, p, enorm, restarts=8, seed=0) -> NormEstimate:
    """Bracket the projective norm of ``coef`` in ``L_p(weights) (x)_pi E``."""
    coef = np.asarray(coef, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not np.any(coef):
        return NormEstimate.exact(0.0, "zero")
    vv = vv_norm(coef, w, p, enorm)
    if p == 1:
        return NormEstimate.exact(vv, "exact-L1(E)")
    if isinstance(enorm, WeightedLr) and enorm.r == 1:
        val = float(np.sum(weighted_norm(coef.T, w, p) * enorm.c))
        return NormEstimate.exact(val, "exact-l1(L)")
    if (est := _cross_value(coef, w, p, enorm)) is not None:
        return est
    costs = _decomposition_costs(coef, w, p, enorm)
    tag = min(costs, key=costs.get)
    upper = costs[tag]
    # duality: the Bochner-norming tensor has injective dual norm <= 1
    rows = enorm(coef)
    W = np.zeros_like(coef)
    for i in range(coef.shape[0]):
        if rows[i] > 0:
            W[i] = (rows[i] / vv) ** (p - 1) * enorm.norming(coef[i])
    # polar of the whitened matrix: exact for Hilbertian E at p = 2
    B = (w ** (1 / p))[:, None] * coef
    U, _, Vt = np.linalg.svd(B, full_matrices=False)
    polar = (w ** (1 / p - 1))[:, None] * (U @ Vt)
    lower = vv
    for cand in (W, polar):
        pair = float(np.sum(w[:, None] * cand * coef))
        inj = min_norm(cand, w, conjugate(p), enorm.dual(), restarts, seed)
        if inj.upper > 0:
            lower = max(lower, abs(pair) / inj.upper)
    lower = min(lower, upper)
    return NormEstimate(lower, upper, (f"decomposition-{tag}", "duality-bochner"))


def amplified_norm(u: AmplifiedElement) -> NormEstimate:
    h = u.host
    w = h.base.weights
    c = u.coef
    if h.kind == "vector_valued":
        return NormEstimate.exact(vv_norm(c, w, h.p, h.enorm), "exact-bochner")
    if h.kind == "min":
        return min_norm(c, w, h.p, h.enorm, h.restarts, h.seed)
    if h.kind == "max":
        return max_norm(c, w, h.p, h.enorm, h.restarts, h.seed)
    if h.kind == "standard_extension":
        d = h.inner.base.dim
        blocks = [h.inner.norm(c[j * d : (j + 1) * d]) for j in range(h.base.copies)]
        lo = np.array([b.lower for b in blocks])
        up = np.array([b.upper for b in blocks])
        tags = ("standard-extension",) + tuple(sorted({t for b in blocks for t in b.method_tags}))
        return NormEstimate(
            float(weighted_norm(lo, np.ones(len(lo)), h.p)), float(weighted_norm(up, np.ones(len(up)), h.p)), tags
        )
    if h.kind == "induced":
        return amplified_norm(AmplifiedElement(h.structure, j_map(c, h.structure.base.copies)))
    if h.kind == "pconvex_tensor":
        from .tensor import tensor_norm_of_host

        return tensor_norm_of_host(h, c)
    raise UnsupportedKindError(f"unsupported kind {h.kind!r}")


# -- module structure ------------------------------------------------------


def module_action(a, u: AmplifiedElement) -> AmplifiedElement:
    """``(a (x) id_E) u``."""
    m = a.matrix if isinstance(a, LpOperator) else np.asarray(a)
    if m.shape != (u.host.base.dim, u.host.base.dim):
        raise ValueError("shape mismatch between operator and amplification")
    return AmplifiedElement(u.host, m @ u.coef)


def functional_action(f: LpFunctional, u: AmplifiedElement) -> np.ndarray:
    """``(f (x) id_E) u``, an element of E."""
    if f.space.dim != u.host.base.dim:
        raise ValueError("shape mismatch")
    return (f.space.weights * f.coef) @ u.coef


def extension_dual_norm(fs: Sequence[LpFunctional]) -> float:
    """Norm of a functional on the standard extension, from its components."""
    if not fs:
        return 0.0
    q = fs[0].q
    norms = np.array([f.norm() for f in fs])
    if np.isinf(q):
        return float(norms.max())
    return float(np.sum(norms**q) ** (1 / q))


def near_L_check(host: QuantizedSpace, trials: int = 1000, seed: int = 0, tol: float = TOL_CHECK) -> CheckReport:
    """Sample ``(f, u)`` and test ``||(f (x) id) u|| <= ||f|| ||u||``."""
    rng = np.random.default_rng(seed)
    d, n = host.shape
    w = host.base.weights
    enorm = host.enorm
    if enorm is None:
        raise UnsupportedKindError("near-L check needs an explicit underlying norm")
    worst, wit = -np.inf, None
    for t in range(trials):
        coef = rng.standard_normal((d, n))
        if t % 4 == 1:
            coef[rng.random(d) < 0.5] = 0.0
        elif t % 4 == 2:
            coef = np.outer(rng.standard_normal(d), rng.standard_normal(n))
        if t % 2 == 0:
            fc = rng.standard_normal(d)
        else:
            g = rng.standard_normal(n)
            y = coef @ g
            fc = np.sign(y) * np.abs(y) ** (host.p - 1) if np.any(y) else rng.standard_normal(d)
        f = LpFunctional(host.base, host.p, fc)
        nf = f.norm()
        nu = host.norm(coef).upper
        if nf == 0 or nu == 0:
            continue
        ratio = float(enorm(functional_action(f, AmplifiedElement(host, coef)))) / (nf * nu)
        if ratio > worst:
            worst, wit = ratio, (fc, coef)

    fc, coef = wit

    def reeval():
        f = LpFunctional(host.base, host.p, fc)
        return float(enorm(functional_action(f, AmplifiedElement(host, coef)))) / (f.norm() * host.norm(coef).upper)

    return CheckReport(
        name="near_L",
        trials=trials,
        worst_ratio=worst,
        witness={"f": fc, "u": coef},
        passed=bool(worst <= 1 + 10 * tol),
        tolerances={"tol": tol, "fail_above": 1 + 10 * tol},
        seed=seed,
        details={"host": host.describe()},
        _reeval=reeval,
    )


# -- diamonds --------------------------------------------------------------


def cantor_pairing(s, t):
    return (s + t) * (s + t + 1) // 2 + t


@dataclass(frozen=True, eq=False)
class DiamondOp:
    """Bilinear ``source x source -> target`` given by an injective pairing.

    ``(xi <> eta)[sigma(s, t)] = scale(s, t) xi_s eta_t`` with
    ``scale = (w_s w_t / w_sigma)^(1/p)``, so ``||xi <> eta|| = ||xi|| ||eta||``.
    """

    source: Space
    target: Space
    sigma: np.ndarray
    p: float

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=int)
        d = self.source.dim
        if sig.shape != (d, d):
            raise ValueError("pairing must be a dim x dim index table")
        if sig.min() < 0 or sig.max() >= self.target.dim:
            raise DiamondOverflowError("diamond overflow: increase copies/resolution")
        if len(np.unique(sig)) != sig.size:
            raise ValueError("pairing must be injective")
        object.__setattr__(self, "sigma", sig)

    @property
    def scale(self) -> np.ndarray:
        w = self.source.weights
        wt = self.target.weights
        return (np.outer(w, w) / wt[self.sigma]) ** (1.0 / self.p)

    @property
    def live_source(self) -> np.ndarray:
        return np.arange(self.source.dim)

    def apply(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        d = self.source.dim
        if u.ndim == 1:
            u = u[:, None]
        if v.ndim == 1:
            v = v[:, None]
        if u.shape[0] != d or v.shape[0] != d:
            raise ValueError("diamond source does not match the amplification base")
        prod = np.einsum("si,tj->stij", u, v) * self.scale[:, :, None, None]
        out = np.zeros((self.target.dim, u.shape[1] * v.shape[1]))
        out[self.sigma.ravel()] = prod.reshape(d * d, -1)
        return out

    def apply_vectors(self, xi, eta) -> np.ndarray:
        return self.apply(xi, eta)[:, 0]

    def slots(self, s: int, side: str = "left"):
        """Target index and scale of ``e_s <> e_t`` (left) or ``e_t <> e_s`` (right) for every ``t``."""
        if side == "left":
            return self.sigma[s, :].copy(), self.scale[s, :].copy()
        return self.sigma[:, s].copy(), self.scale[:, s].copy()

    def describe(self) -> dict:
        return {"type": "diamond", "source_dim": self.source.dim, "target_dim": self.target.dim}


def canonical_diamond(space: Space, p: float, pairing: str = "cantor", target: Space | None = None) -> DiamondOp:
    d = space.dim
    s, t = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    if pairing == "cantor":
        sigma = cantor_pairing(s, t)
    elif pairing == "product":
        sigma = s * d + t
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    if target is None:
        target = CopiedSpace(space, math.ceil((int(sigma.max()) + 1) / d))
    return DiamondOp(space, target, sigma, p)


@dataclass(frozen=True, eq=False)
class BarDiamond:
    """``ubar <>bar vbar = J(Q ubar <> Q vbar)`` on copied spaces."""

    base: DiamondOp
    copies: int

    @property
    def p(self):
        return self.base.p

    @property
    def source(self) -> CopiedSpace:
        return CopiedSpace(self.base.source, self.copies)

    @property
    def target(self) -> CopiedSpace:
        return CopiedSpace(self.base.target, self.copies)

    @property
    def live_source(self) -> np.ndarray:
        return np.arange(self.base.source.dim)

    def apply(self, u, v) -> np.ndarray:
        d = self.base.source.dim
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape[0] != self.source.dim or v.shape[0] != self.source.dim:
            raise ValueError("bar-diamond expects elements over the copied space")
        return j_map(self.base.apply(u[:d], v[:d]), self.copies)

    def apply_vectors(self, xi, eta) -> np.ndarray:
        return self.apply(xi, eta)[:, 0]

    def slots(self, s: int, side: str = "left"):
        """As :meth:`DiamondOp.slots`; coordinates outside copy 1 are dead (index -1)."""
        d = self.base.source.dim
        idx, sc = self.base.slots(s, side)
        out_idx = np.full(self.source.dim, -1)
        out_sc = np.zeros(self.source.dim)
        out_idx[:d] = idx
        out_sc[:d] = sc
        return out_idx, out_sc

    def describe(self) -> dict:
        return {"type": "bar-diamond", "copies": self.copies, "base": self.base.describe()}


def diamond(d, u: AmplifiedElement, v: AmplifiedElement) -> np.ndarray:
    """Amplified diamond ``u <> v`` as a ``(dim target, dimE * dimF)`` array."""
    if u.host.base != d.source or v.host.base != d.source:
        raise ValueError("diamond source does not match the hosts' base")
    return d.apply(u.coef, v.coef)


def bar_diamond(d: BarDiamond, ubar: AmplifiedElement, vbar: AmplifiedElement) -> np.ndarray:
    return diamond(d, ubar, vbar)


def diamond_norm_check(d, samples: int = 200, seed: int = 0) -> NormEstimate:
    """Bracket the bilinear norm of a diamond by sampling; the upper bound is
    the pairing's exact cross identity (scale rule), capped by 1."""
    rng = np.random.default_rng(seed)
    src = d.source
    w = src.weights
    wt = d.target.weights
    p = d.p
    best = 0.0
    for _ in range(samples):
        xi = rng.standard_normal(src.dim)
        eta = rng.standard_normal(src.dim)
        if rng.random() < 0.3:
            xi[rng.random(src.dim) < 0.5] = 0.0
        den = weighted_norm(xi, w, p) * weighted_norm(eta, w, p)
        if den > 0:
            best = max(best, float(weighted_norm(d.apply_vectors(xi, eta), wt, p) / den))
    return NormEstimate(min(best, 1.0), 1.0, ("sampled", "scale-rule"))


# -- J / Q -----------------------------------------------------------------


def j_map(coef, copies: int) -> np.ndarray:
    """Place ``coef`` in copy 1 of ``copies`` copies."""
    coef = np.asarray(coef)
    out = np.zeros((copies * coef.shape[0],) + coef.shape[1:], dtype=coef.dtype)
    out[: coef.shape[0]] = coef
    return out


def q_map(coef, base_dim: int) -> np.ndarray:
    """Extract copy 1."""
    return np.asarray(coef)[:base_dim].copy()


def j_element(u: AmplifiedElement, copies: int) -> AmplifiedElement:
    return AmplifiedElement(standard_extension(u.host, copies), j_map(u.coef, copies))


def q_element(ubar: AmplifiedElement) -> AmplifiedElement:
    h = ubar.host
    if h.kind != "standard_extension":
        raise ValueError("Q acts on standard extensions")
    return AmplifiedElement(h.inner, q_map(ubar.coef, h.inner.base.dim))


# -- amplified operators ---------------------------------------------------

_SAME_KIND_OK = {"min", "max", "vector_valued"}


def _structure_bound_applies(hE: QuantizedSpace, hF: QuantizedSpace) -> bool:
    if hE.kind == "standard_extension" or hF.kind == "standard_extension":
        if hE.kind != hF.kind or hE.base.copies != hF.base.copies:
            return False
        return _structure_bound_applies(hE.inner, hF.inner)
    if hE.kind == hF.kind and hE.kind in _SAME_KIND_OK:
        return True
    if hE.kind == "max" and hF.kind in _SAME_KIND_OK:
        return True
    if hF.kind == "min" and hE.kind in _SAME_KIND_OK:
        return True
    return False


def amplify_operator(phi, hostE: QuantizedSpace, hostF: QuantizedSpace, trials: int = 64, seed: int = 0):
    """``phi_inf = id_L (x) phi`` and a bracket on its norm.

    Returns ``(apply, estimate)`` where ``apply`` maps ``LE`` coefficient
    arrays to ``LF`` ones.
    """
    phi = np.asarray(phi, dtype=float)
    if hostE.base != hostF.base:
        raise ValueError("hosts must share the base space")
    if phi.shape != (hostF.underlying_dim, hostE.underlying_dim):
        raise ValueError("shape mismatch between map and hosts")

    def apply(coef):
        return np.asarray(coef) @ phi.T

    if not np.any(phi):
        return apply, NormEstimate.exact(0.0, "zero")
    op = underlying_operator_norm(phi, hostE.enorm, hostF.enorm)
    rng = np.random.default_rng(seed)
    d, n = hostE.shape
    lower = op.lower  # attained on an elementary tensor: cross norms
    for _ in range(trials):
        coef = rng.standard_normal((d, n))
        nu = hostE.norm(coef).upper
        if nu > 0:
            lower = max(lower, hostF.norm(apply(coef)).lower / nu)
    if _structure_bound_applies(hostE, hostF):
        upper, tag = op.upper, "structure-bound"
    else:
        upper, tag = np.inf, "no-structure-bound"
    lower = min(lower, upper)
    return apply, NormEstimate(lower, upper, (tag,) + op.method_tags)
