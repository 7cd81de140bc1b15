"""The p-convex tensor norm on ``E (x) F``.

An element ``U`` of ``Y(E (x) F)`` (``Y`` an L_p space of the model, stored as a
``(dim Y, dimE * dimF)`` array with column ``i * dimF + j``) is bounded above
by any representation

    U = a . sum_k I_k (u_k <> v_k),        cost = ||a|| (sum_k ||u_k||^p ||v_k||^p)^(1/p)

where ``I_k`` places the diamond's target in copy ``k`` of a routing space and
``a`` maps the routing space into ``Y``.  Lower bounds come from bilinear
certificates ``rho`` with a verified bound on ``||rho_inf||``: every
representation satisfies ``||R_inf U|| <= ||rho_inf|| cost``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .banach import WeightedLr
from .lpcore import NormEstimate, conjugate, operator_norm, weighted_norm
from .measure import CopiedSpace, MeasurableSubset, Space, copy_isometries
from .quantization import (
    BarDiamond,
    DiamondOp,
    QuantizedSpace,
    _decomposition_costs,
    amplify_operator,
    canonical_diamond,
    j_map,
    standard_extension,
)
from .report import CheckReport

DEFAULT_COPIES = 8
DEFAULT_BUDGET = 64
J_COPIES = 2
RECON_TOL = 1e-10
CERT_SAMPLES = 16


class InsufficientCopiesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TensorProblem:
    """Hosts, diamond and the output space ``Y`` of the elements to be normed."""

    hostE: QuantizedSpace
    hostF: QuantizedSpace
    diamond: DiamondOp | BarDiamond
    output: Space

    def __post_init__(self):
        if self.hostE.base != self.hostF.base:
            raise ValueError("hosts must share the base space")
        if self.hostE.p != self.hostF.p or self.diamond.p != self.hostE.p:
            raise ValueError("hosts and diamond must share p")
        if self.diamond.source != self.hostE.base:
            raise ValueError("diamond source does not match the hosts' base")

    @property
    def p(self) -> float:
        return self.hostE.p

    @property
    def nE(self) -> int:
        return self.hostE.underlying_dim

    @property
    def nF(self) -> int:
        return self.hostF.underlying_dim

    @property
    def shape(self) -> tuple[int, int]:
        return (self.output.dim, self.nE * self.nF)

    def routing(self, K: int) -> CopiedSpace:
        return CopiedSpace(self.diamond.target, max(K, 1))


def cheap_upper(host: QuantizedSpace, coef) -> float:
    """A fast valid upper bound on the host norm (used inside searches)."""
    coef = np.asarray(coef, dtype=float)
    w = host.base.weights
    if host.kind in ("vector_valued", "min"):
        # the Bochner norm dominates the injective one
        return float(weighted_norm(host.enorm(coef), w, host.p))
    if host.kind == "max":
        if host.p == 1:
            return float(weighted_norm(host.enorm(coef), w, 1.0))
        return min(_decomposition_costs(coef, w, host.p, host.enorm).values())
    if host.kind == "standard_extension":
        d = host.inner.base.dim
        parts = [cheap_upper(host.inner, coef[j * d : (j + 1) * d]) for j in range(host.base.copies)]
        return float(np.sum(np.asarray(parts) ** host.p) ** (1 / host.p))
    return host.norm(coef).upper


def _operator_upper(a, problem: TensorProblem, K: int) -> NormEstimate:
    # only the upper end enters a cost
    w_in = problem.routing(K).weights
    w_out = problem.output.weights
    return operator_norm(a, problem.p, w_in=w_in, w_out=w_out, upper_only=True)


@dataclass(frozen=True, eq=False)
class Representation:
    problem: TensorProblem
    a: np.ndarray
    us: tuple
    vs: tuple
    tags: tuple = ()

    @property
    def K(self) -> int:
        return len(self.us)

    @property
    def routing(self) -> CopiedSpace:
        return self.problem.routing(self.K)

    @property
    def isometries(self):
        """The proper isometries ``I_k`` (diamond target onto copy ``k``)."""
        return copy_isometries(self.routing)[: self.K]

    def routed(self) -> np.ndarray:
        return _routed(self.problem, self.us, self.vs)

    def value(self) -> np.ndarray:
        if self.K == 0:
            return np.zeros(self.problem.shape)
        return self.a @ self.routed()

    def term_norms(self, accurate: bool = True) -> np.ndarray:
        hE, hF = self.problem.hostE, self.problem.hostF
        if accurate:
            return np.array([[hE.norm(u).upper, hF.norm(v).upper] for u, v in zip(self.us, self.vs)])
        return np.array([[cheap_upper(hE, u), cheap_upper(hF, v)] for u, v in zip(self.us, self.vs)])

    def a_norm(self) -> NormEstimate:
        if self.K == 0 or not np.any(self.a):
            return NormEstimate.exact(0.0, "zero")
        return _operator_upper(self.a, self.problem, self.K)

    def cost(self, accurate: bool = True) -> float:
        if self.K == 0:
            return 0.0
        tn = self.term_norms(accurate)
        s = float(np.sum((tn[:, 0] * tn[:, 1]) ** self.problem.p) ** (1 / self.problem.p))
        if s == 0:
            return 0.0
        return self.a_norm().upper * s

    def to_dict(self) -> dict:
        return {
            "terms": self.K,
            "a": self.a,
            "u": [np.asarray(u) for u in self.us],
            "v": [np.asarray(v) for v in self.vs],
            "tags": list(self.tags),
        }


def _routed(problem: TensorProblem, us, vs) -> np.ndarray:
    dT = problem.diamond.target.dim
    W = np.zeros((max(len(us), 1) * dT, problem.nE * problem.nF))
    for k, (u, v) in enumerate(zip(us, vs)):
        W[k * dT : (k + 1) * dT] = problem.diamond.apply(u, v)
    return W


def _fit(problem: TensorProblem, U, us, vs):
    """Least-norm ``a`` with ``a W = U``; ``None`` if ``U`` is not reached."""
    W = _routed(problem, us, vs)
    at, *_ = np.linalg.lstsq(W.T, U.T, rcond=None)
    a = at.T
    scale = max(1.0, float(np.abs(U).max(initial=0.0)))
    if np.abs(a @ W - U).max(initial=0.0) > RECON_TOL * scale:
        return None
    return a


# -- seeds -----------------------------------------------------------------


def _unit_coordinate(problem: TensorProblem):
    src = problem.diamond.source
    s0 = int(problem.diamond.live_source[0])
    nu = np.zeros(src.dim)
    nu[s0] = src.weights[s0] ** (-1 / problem.p)
    return s0, nu


def elementary_representation(problem: TensorProblem, terms, tag: str = "elementary") -> Representation:
    """Route each ``xi_k (x) (x_k (x) y_k)`` through copy ``k``.

    ``u_k = nu (x) x_k``, ``v_k = nu (x) y_k`` with ``nu`` a unit coordinate
    vector, so ``u_k <> v_k = tau (x) (x_k (x) y_k)`` for ``tau = nu <> nu`` of
    norm one; ``a`` sends copy ``k`` to ``xi_k`` via the norming functional of
    ``tau``.
    """
    terms = [(np.asarray(xi, float), np.asarray(x, float), np.asarray(y, float)) for xi, x, y in terms]
    terms = [t for t in terms if np.any(t[0]) and np.any(t[1]) and np.any(t[2])]
    K = len(terms)
    dT = problem.diamond.target.dim
    a = np.zeros((problem.output.dim, max(K, 1) * dT))
    if K == 0:
        return Representation(problem, a, (), (), (tag,))
    _, nu = _unit_coordinate(problem)
    tau = problem.diamond.apply_vectors(nu, nu)
    wt = problem.diamond.target.weights
    ntau = weighted_norm(tau, wt, problem.p)
    f = np.sign(tau) * (np.abs(tau) / ntau) ** (problem.p - 1) / ntau
    us, vs = [], []
    for k, (xi, x, y) in enumerate(terms):
        a[:, k * dT : (k + 1) * dT] = np.outer(xi, wt * f)
        us.append(np.outer(nu, x))
        vs.append(np.outer(nu, y))
    return Representation(problem, a, tuple(us), tuple(vs), (tag,))


def decompose(U, problem: TensorProblem, copies: int | None = None) -> Representation:
    """Representation from the coordinate expansion ``U = sum xi_ij (e_i (x) e_j)``."""
    U = _as_element(U, problem)
    nE, nF = problem.nE, problem.nF
    terms = []
    for i in range(nE):
        for j in range(nF):
            col = U[:, i * nF + j]
            if np.any(col):
                terms.append((col, np.eye(nE)[i], np.eye(nF)[j]))
    if copies is not None and len(terms) > copies:
        raise InsufficientCopiesError(f"insufficient copies: {len(terms)} terms need {len(terms)} copies, got {copies}")
    return elementary_representation(problem, terms, "seed-basis")


def _svd_terms(U, problem: TensorProblem):
    p = problem.p
    wY = problem.output.weights
    B = (wY ** (1 / p))[:, None] * U
    P, s, Qt = np.linalg.svd(B, full_matrices=False)
    terms = []
    for r in range(len(s)):
        if s[r] <= 1e-14 * max(s[0], 1e-300):
            continue
        xi = s[r] * (wY ** (-1 / p)) * P[:, r]
        M = Qt[r].reshape(problem.nE, problem.nF)
        X, t, Yt = np.linalg.svd(M, full_matrices=False)
        for l in range(len(t)):
            if t[l] > 1e-14 * t[0]:
                terms.append((t[l] * xi, X[:, l], Yt[l]))
    return terms


def _slice_representation(U, problem: TensorProblem, side: str) -> Representation | None:
    """One term per basis vector of E (side 'E') or of F (side 'F')."""
    if problem.output != problem.diamond.source:
        return None
    nE, nF, p = problem.nE, problem.nF, problem.p
    U3 = U.reshape(U.shape[0], nE, nF)
    s0, nu = _unit_coordinate(problem)
    idx, sc = problem.diamond.slots(s0, "left" if side == "E" else "right")
    live = idx >= 0
    dT = problem.diamond.target.dim
    n = nE if side == "E" else nF
    us, vs, blocks = [], [], []
    for i in range(n):
        S = U3[:, i, :] if side == "E" else U3[:, :, i]
        if not np.any(S):
            continue
        if np.any(S[~live]):
            return None
        e = np.eye(n)[i]
        if side == "E":
            us.append(np.outer(nu, e))
            vs.append(S.copy())
        else:
            us.append(S.copy())
            vs.append(np.outer(nu, e))
        blk = np.zeros((problem.output.dim, dT))
        t = np.flatnonzero(live)
        blk[t, idx[t]] = 1.0 / (nu[s0] * sc[t])
        blocks.append(blk)
    if not us:
        return None
    return Representation(problem, np.hstack(blocks), tuple(us), tuple(vs), (f"seed-slice-{side}",))


def _diagonal_representation(U, problem: TensorProblem) -> Representation | None:
    """A single term ``u = sum_i c_i e_(s_i) (x) e_i`` carrying all of ``U`` in ``a``."""
    live = problem.diamond.live_source
    nE, nF, p = problem.nE, problem.nF, problem.p
    if len(live) < max(nE, nF):
        return None
    w = problem.diamond.source.weights
    src = problem.diamond.source.dim
    u = np.zeros((src, nE))
    v = np.zeros((src, nF))
    sE = live[:nE]
    sF = live[:nF]
    u[sE, np.arange(nE)] = 1.0
    v[sF, np.arange(nF)] = 1.0
    u /= cheap_upper(problem.hostE, u)
    v /= cheap_upper(problem.hostF, v)
    a = _fit(problem, U, (u,), (v,))
    if a is None:
        return None
    return Representation(problem, a, (u,), (v,), ("seed-diagonal",))


def seed_representations(U, problem: TensorProblem) -> list[Representation]:
    U = _as_element(U, problem)
    seeds = [decompose(U, problem)]
    seeds.append(elementary_representation(problem, _svd_terms(U, problem), "seed-svd"))
    for side in ("E", "F"):
        r = _slice_representation(U, problem, side)
        if r is not None:
            seeds.append(r)
    r = _diagonal_representation(U, problem)
    if r is not None:
        seeds.append(r)
    return seeds


# -- upper search ----------------------------------------------------------


def improve(rep: Representation, U, budget: int, seed: int) -> Representation:
    """Greedy seeded local search over the terms with ``a`` refit by least norm.

    Iteration ``t`` depends only on the state after ``t - 1`` and on the seed,
    so a larger budget extends the same trajectory: the result is monotone in
    the budget.  Costs here use fast upper bounds (see :func:`cheap_upper`).
    """
    problem = rep.problem
    p = problem.p
    K = rep.K
    if K == 0 or budget <= 0:
        return rep
    rng = np.random.default_rng(np.random.SeedSequence([seed, K, 7]))
    us = [np.array(u, float) for u in rep.us]
    vs = [np.array(v, float) for v in rep.vs]
    nu = np.array([cheap_upper(problem.hostE, u) for u in us])
    nv = np.array([cheap_upper(problem.hostF, v) for v in vs])

    def total(a, nu, nv):
        s = float(np.sum((nu * nv) ** p) ** (1 / p))
        return _operator_upper(a, problem, K).upper * s

    best_a = rep.a
    best = total(best_a, nu, nv)
    fitted = _fit(problem, U, us, vs)
    if fitted is not None:
        c = total(fitted, nu, nv)
        if c < best:
            best, best_a = c, fitted
    step = 0.3
    for _ in range(budget):
        k = int(rng.integers(K))
        move = rng.random()
        side = rng.random() < 0.5
        cu, cv = [x.copy() for x in us], [x.copy() for x in vs]
        if move < 0.3:
            factor = math.exp(step * rng.standard_normal())
            cu[k] = cu[k] * factor
        else:
            tgt = cu if side else cv
            noise = rng.standard_normal(tgt[k].shape)
            tgt[k] = tgt[k] + step * noise * (np.abs(tgt[k]).max() + 1e-12)
        a = _fit(problem, U, cu, cv)
        if a is None:
            step = max(step * 0.7, 1e-4)
            continue
        cnu, cnv = nu.copy(), nv.copy()
        cnu[k] = cheap_upper(problem.hostE, cu[k])
        cnv[k] = cheap_upper(problem.hostF, cv[k])
        c = total(a, cnu, cnv)
        if c < best * (1 - 1e-12):
            best, best_a, us, vs, nu, nv = c, a, cu, cv, cnu, cnv
            step = min(step * 1.5, 2.0)
        else:
            step = max(step * 0.85, 1e-4)
    return Representation(problem, best_a, tuple(us), tuple(vs), rep.tags + (f"search(budget={budget})",))


def tensor_norm_upper(U, problem: TensorProblem, copies: int = DEFAULT_COPIES, budget: int = DEFAULT_BUDGET, seed: int = 0):
    """Best representation cost with at most ``copies`` routing copies.

    Returns ``(upper, representation, trace)`` where ``trace[N]`` is the best
    accurate cost among candidates using at most ``N`` copies.
    """
    U = _as_element(U, problem)
    if not np.any(U):
        empty = elementary_representation(problem, [], "zero")
        return 0.0, empty, {N: 0.0 for N in range(1, copies + 1)}
    found = []
    for i, rep in enumerate(seed_representations(U, problem)):
        if rep.K > copies:
            continue
        cands = [rep, improve(rep, U, budget, seed + 1000 * i)]
        for c in cands:
            if np.abs(c.value() - U).max() > RECON_TOL * max(1.0, np.abs(U).max()):
                continue
            found.append((c.cost(accurate=True), c))
    if not found:
        raise InsufficientCopiesError(f"insufficient copies: no representation fits in {copies} copies")
    trace = {}
    for N in range(1, copies + 1):
        fits = [c for c, r in found if r.K <= N]
        trace[N] = min(fits) if fits else math.inf
    best_cost, best_rep = min(found, key=lambda t: t[0])
    return best_cost, best_rep, trace


# -- certificates ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LowerCertificate:
    """A bilinear ``rho: E x F -> G`` into a p-convex structure with a bound on ``||rho_inf||``.

    ``kind == "scalar"``: ``rho(x, y) = g(x) h(y)`` into the scalars.
    ``kind == "identity"``: ``rho(x, y) = x (x) y`` into the Bochner space
    ``L_p(E (x)_r F)`` for weighted l_r factors (a cross norm).
    """

    kind: str
    g: np.ndarray | None
    h: np.ndarray | None
    verified_amp_bound: float
    method_tags: tuple = ()
    pair_norm: WeightedLr | None = None

    def apply(self, U) -> np.ndarray:
        """``R_inf U`` as a ``(dim Y, dim G)`` array."""
        U = np.asarray(U, dtype=float)
        if self.kind == "scalar":
            return (U @ np.kron(self.g, self.h))[:, None]
        return U

    def value(self, U, weights, p) -> float:
        RU = self.apply(U)
        if self.kind == "scalar":
            return float(weighted_norm(RU[:, 0], weights, p))
        return float(weighted_norm(self.pair_norm(RU), weights, p))

    def bound_for(self, U, weights, p) -> float:
        if self.verified_amp_bound <= 0:
            return 0.0
        return self.value(U, weights, p) / self.verified_amp_bound

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "g": self.g,
            "h": self.h,
            "verified_amp_bound": self.verified_amp_bound,
            "method_tags": list(self.method_tags),
        }


def _sample_amp_ratio(cert: LowerCertificate, problem: TensorProblem, samples: int, seed: int) -> float:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 23]))
    d = problem.hostE.base.dim
    wT = problem.diamond.target.weights
    worst = 0.0
    for _ in range(samples):
        u = rng.standard_normal((d, problem.nE))
        v = rng.standard_normal((d, problem.nF))
        nu = cheap_upper(problem.hostE, u)
        nv = cheap_upper(problem.hostF, v)
        if nu == 0 or nv == 0:
            continue
        val = cert.value(problem.diamond.apply(u, v), wT, problem.p)
        worst = max(worst, val / (nu * nv))
    return worst


def scalar_certificate(g, h, problem: TensorProblem, verify: int = CERT_SAMPLES, seed: int = 0):
    """Certificate ``g (x) h``; the bound ``||g||_* ||h||_*`` holds for near-L hosts."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    bound = float(problem.hostE.enorm.dual()(g) * problem.hostF.enorm.dual()(h))
    cert = LowerCertificate("scalar", g, h, bound, ("scalar", "dual-norm-product"))
    if verify and _sample_amp_ratio(cert, problem, verify, seed) > bound * (1 + 1e-9) + 1e-12:
        return None
    return cert


def _identity_applicable(problem: TensorProblem):
    def root(h):
        while h.kind == "standard_extension":
            h = h.inner
        return h

    rE, rF = root(problem.hostE), root(problem.hostF)
    ok_kinds = {"vector_valued", "max"}
    if rE.kind not in ok_kinds or rF.kind not in ok_kinds:
        return None
    eE, eF = rE.enorm, rF.enorm
    if not (isinstance(eE, WeightedLr) and isinstance(eF, WeightedLr)) or eE.r != eF.r:
        return None
    return WeightedLr(eE.r, eE.dim * eF.dim, tuple(np.kron(eE.c, eF.c)))


def identity_certificate(problem: TensorProblem, verify: int = CERT_SAMPLES, seed: int = 0):
    """``x (x) y`` into ``L_p(E (x)_r F)``; amplification bound 1 for Bochner/projective hosts."""
    pn = _identity_applicable(problem)
    if pn is None:
        return None
    cert = LowerCertificate("identity", None, None, 1.0, ("identity", "bochner-cross-norm"), pair_norm=pn)
    if verify and _sample_amp_ratio(cert, problem, verify, seed) > 1 + 1e-9:
        return None
    return cert


def best_scalar_certificate(U, problem: TensorProblem, restarts: int = 8, seed: int = 0):
    """Maximize ``||U (g (x) h)||_p`` over unit ``g in E*``, ``h in F*`` by alternation."""
    U = _as_element(U, problem)
    nE, nF, p = problem.nE, problem.nF, problem.p
    w = problem.output.weights
    eE, eF = problem.hostE.enorm, problem.hostF.enorm
    dE, dF = eE.dual(), eF.dual()
    U3 = U.reshape(U.shape[0], nE, nF)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 31]))
    starts = []
    for t in _svd_terms(U, problem)[:4]:
        starts.append(eF.norming(t[2]) if np.any(t[2]) else np.ones(nF))
    starts += [np.eye(nF)[j] for j in range(nF)]
    starts += list(rng.standard_normal((restarts, nF)))
    best_val, best = -1.0, (np.eye(nE)[0], np.eye(nF)[0])
    for h in starts:
        if dF(h) == 0:
            continue
        h = h / dF(h)
        g = None
        prev = -1.0
        for _ in range(50):
            c = np.einsum("sij,j->si", U3, h)
            g0 = _dual_guess(c, eE, w, p) if g is None else g
            f = _lp_norming(c @ g0, w, p)
            if not np.any(f):
                break
            g = eE.norming((w * f) @ c)
            if dE(g) == 0:
                break
            g = g / dE(g)
            c2 = np.einsum("sij,i->sj", U3, g)
            f = _lp_norming(c2 @ h, w, p)
            if not np.any(f):
                break
            h = eF.norming((w * f) @ c2)
            if dF(h) == 0:
                break
            h = h / dF(h)
            val = float(weighted_norm(U @ np.kron(g, h), w, p))
            if val > best_val:
                best_val, best = val, (g.copy(), h.copy())
            if val <= prev * (1 + 1e-13):
                break
            prev = val
    return scalar_certificate(best[0], best[1], problem, seed=seed)


def _dual_guess(c, enorm, w, p):
    """A unit direction in E* that makes ``c g`` large (largest weighted row)."""
    rows = enorm(c)
    i = int(np.argmax(w ** (1 / p) * rows))
    g = enorm.norming(c[i])
    n = enorm.dual()(g)
    return g / n if n > 0 else g


def _lp_norming(y, w, p):
    ny = weighted_norm(y, w, p)
    if ny == 0:
        return np.zeros_like(y)
    return np.sign(y) * (np.abs(y) / ny) ** (p - 1)


def tensor_norm_lower(U, certs: Sequence[LowerCertificate | None], problem: TensorProblem):
    """``max ||R_inf U|| / verified_amp_bound`` over the certificates."""
    certs = [c for c in certs if c is not None and c.verified_amp_bound > 0]
    if not certs:
        warnings.warn("no usable certificate: lower bound 0")
        return 0.0, None
    U = _as_element(U, problem)
    vals = [(c.bound_for(U, problem.output.weights, problem.p), c) for c in certs]
    return max(vals, key=lambda t: t[0])


# -- the norm --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TensorNormResult:
    estimate: NormEstimate
    best_rep: Representation
    best_cert: LowerCertificate | None
    copies_used: int
    trace: dict
    route: str
    budget: int

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate.to_dict(),
            "route": self.route,
            "copies_used": self.copies_used,
            "budget": self.budget,
            "trace": {str(k): v for k, v in self.trace.items()},
            "representation": self.best_rep.to_dict(),
            "certificate": None if self.best_cert is None else self.best_cert.to_dict(),
        }


def _as_element(U, problem: TensorProblem) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1 and problem.shape[1] == 1:
        U = U[:, None]
    if U.shape != problem.shape:
        raise ValueError(f"shape mismatch: element {U.shape} vs expected {problem.shape}")
    return U


def direct_problem(hostE, hostF, diamond=None, output: Space | None = None) -> TensorProblem:
    if diamond is None:
        diamond = canonical_diamond(hostE.base, hostE.p)
    return TensorProblem(hostE, hostF, diamond, hostE.base if output is None else output)


def j_problem(hostE, hostF, diamond=None, j_copies: int = J_COPIES) -> TensorProblem:
    """The lifted problem on ``N_J`` copies with standard extensions and the bar-diamond."""
    if diamond is None:
        diamond = canonical_diamond(hostE.base, hostE.p)
    sE = standard_extension(hostE, j_copies)
    sF = standard_extension(hostF, j_copies)
    return TensorProblem(sE, sF, BarDiamond(diamond, j_copies), sE.base)


def solve(U, problem: TensorProblem, copies=DEFAULT_COPIES, budget=DEFAULT_BUDGET, seed=0, restarts=8, route="direct"):
    U = _as_element(U, problem)
    upper, rep, trace = tensor_norm_upper(U, problem, copies, budget, seed)
    if not np.any(U):
        return TensorNormResult(NormEstimate.exact(0.0, "zero"), rep, None, 0, trace, route, budget)
    certs = [best_scalar_certificate(U, problem, restarts, seed), identity_certificate(problem, seed=seed)]
    lower, cert = tensor_norm_lower(U, certs, problem)
    tags = ("representation", f"copies<={copies}", f"budget={budget}") + (() if cert is None else cert.method_tags)
    est = NormEstimate(min(lower, upper), upper, tags)
    return TensorNormResult(est, rep, cert, rep.K, trace, route, budget)


def tensor_norm(
    U,
    hostE: QuantizedSpace,
    hostF: QuantizedSpace,
    diamond: DiamondOp | None = None,
    copies: int = DEFAULT_COPIES,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    route: str = "auto",
    j_copies: int = J_COPIES,
    restarts: int = 8,
) -> TensorNormResult:
    """Bracket ``||U||`` in the p-convex tensor product of the two hosts.

    ``route="auto"`` computes directly on convenient models and through the
    embedding ``J`` into ``N_J`` copies otherwise; ``"direct"`` and ``"j"``
    force a route.
    """
    if route == "auto":
        route = "direct" if hostE.base.convenient else "j"
    if route == "direct":
        problem = direct_problem(hostE, hostF, diamond)
        return solve(U, problem, copies, budget, seed, restarts, "direct")
    if route == "j":
        problem = j_problem(hostE, hostF, diamond, j_copies)
        U = np.asarray(U, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        return solve(j_map(U, j_copies), problem, copies, budget, seed, restarts, f"j(N_J={j_copies})")
    raise ValueError(f"unknown route {route!r}")


@dataclass(frozen=True)
class TensorSpec:
    hostE: QuantizedSpace
    hostF: QuantizedSpace
    diamond: DiamondOp | None = None
    copies: int = DEFAULT_COPIES
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    route: str = "auto"


def pconvex_tensor_space(hostE, hostF, **kw) -> QuantizedSpace:
    spec = TensorSpec(hostE, hostF, **kw)
    return QuantizedSpace(hostE.base, hostE.p, "pconvex_tensor", tensor=spec)


def tensor_norm_of_host(host: QuantizedSpace, coef) -> NormEstimate:
    t = host.tensor
    return tensor_norm(coef, t.hostE, t.hostF, t.diamond, t.copies, t.budget, t.seed, t.route).estimate


# -- transports ------------------------------------------------------------


def transport_module(rep: Representation, a) -> tuple[Representation, float]:
    """Representation of ``a . U`` from one of ``U``; returns it with a valid cost bound.

    The bound is the smaller of the direct cost and the submultiplicative
    ``upper(||a||) upper(||a_rep||) S``.
    """
    a = np.asarray(a, dtype=float)
    pr = rep.problem
    new = Representation(pr, a @ rep.a, rep.us, rep.vs, rep.tags + ("transported-module",))
    if rep.K == 0:
        return new, 0.0
    na = operator_norm(a, pr.p, w_in=pr.output.weights, w_out=pr.output.weights, upper_only=True).upper
    tn = rep.term_norms(True)
    S = float(np.sum((tn[:, 0] * tn[:, 1]) ** pr.p) ** (1 / pr.p))
    sub = na * rep.a_norm().upper * S
    return new, min(new.cost(True), sub)


def merge_disjoint(rep1: Representation, Z1: MeasurableSubset, rep2: Representation, Z2: MeasurableSubset):
    """Representation of ``U + V`` for ``U = P_Z1 U``, ``V = P_Z2 V`` with disjoint ``Z1, Z2``.

    Each ``a`` is normalized to norm (at most) one and the term sizes absorb
    the scale; ``[P_Z1 a1, P_Z2 a2]`` then has norm at most one because its
    images are disjointly supported.  Returns ``(representation, cost bound)``.
    """
    if not Z1.isdisjoint(Z2):
        raise ValueError("supports must be disjoint")
    pr = rep1.problem
    if rep2.problem.diamond is not pr.diamond or rep2.problem.output != pr.output:
        raise ValueError("representations belong to different problems")
    parts, us, vs = [], [], []
    for rep, Z in ((rep1, Z1), (rep2, Z2)):
        if rep.K == 0:
            continue
        na = rep.a_norm().upper
        proj = Z.mask.astype(float)[:, None] * rep.a
        parts.append(proj / na)
        us += [u * na for u in rep.us]
        vs += list(rep.vs)
    if not parts:
        return elementary_representation(pr, [], "zero"), 0.0
    a = np.hstack(parts)
    merged = Representation(pr, a, tuple(us), tuple(vs), ("merged-disjoint",))
    tn = merged.term_norms(True)
    S = float(np.sum((tn[:, 0] * tn[:, 1]) ** pr.p) ** (1 / pr.p))
    return merged, min(merged.cost(True), S)


def transport_maps(rep: Representation, phi, psi, hostE2: QuantizedSpace, hostF2: QuantizedSpace) -> Representation:
    """Representation of ``(phi (x) psi)_inf U`` as ``(a, phi_inf u_k, psi_inf v_k)``."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    pr = rep.problem
    problem2 = TensorProblem(hostE2, hostF2, pr.diamond, pr.output)
    us = tuple(np.asarray(u) @ phi.T for u in rep.us)
    vs = tuple(np.asarray(v) @ psi.T for v in rep.vs)
    a = rep.a if rep.K else np.zeros((pr.output.dim, pr.diamond.target.dim))
    return Representation(problem2, a, us, vs, rep.tags + ("transported-maps",))


def apply_maps(U, phi, psi) -> np.ndarray:
    """``(phi (x) psi)_inf U`` on coefficient arrays."""
    return np.asarray(U) @ np.kron(np.asarray(phi), np.asarray(psi)).T


# -- universal property ----------------------------------------------------


def universal_factorization_check(
    cert: LowerCertificate,
    hostE: QuantizedSpace,
    hostF: QuantizedSpace,
    samples: int = 20,
    seed: int = 0,
    tol: float = 1e-3,
    j_copies: int = J_COPIES,
    budget: int = 16,
) -> CheckReport:
    """Brackets for ``||rho_inf||``, ``||rhobar_inf||``, ``||R_inf||``, ``||Rbar_inf||``.

    Upper bounds: ``||g|| ||h||`` for a scalar ``rho`` on near-L hosts (also on
    their standard extensions, where ``Q`` is contractive); ``||R_inf|| <=
    ||rho_inf||`` by the representation argument.  Lower bounds: elementary
    tensors built from norming vectors, and sampled elements.
    """
    if cert.kind != "scalar":
        raise ValueError("the factorization check is implemented for scalar certificates")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 41]))
    direct = direct_problem(hostE, hostF)
    lifted = j_problem(hostE, hostF, direct.diamond, j_copies)
    g, h = cert.g, cert.h
    eE, eF = hostE.enorm, hostF.enorm
    ng, nh = float(eE.dual()(g)), float(eF.dual()(h))
    bound = ng * nh
    if bound == 0:
        z = NormEstimate.exact(0.0, "zero")
        brackets = {"rho": z, "rho_bar": z, "R": z, "R_bar": z}
        return _factorization_report(brackets, True, samples, seed, tol, {})
    # norming vectors: x with g(x) = ||g||_* ||x||
    x = eE.dual().norming(g)
    y = eF.dual().norming(h)
    x, y = x / eE(x), y / eF(y)
    d = hostE.base.dim
    p = hostE.p
    w = hostE.base.weights
    xi = np.zeros(d)
    xi[0] = w[0] ** (-1 / p)

    def rho_ratio(problem, u, v):
        val = cert.value(problem.diamond.apply(u, v), problem.diamond.target.weights, p)
        return val / (problem.hostE.norm(u).upper * problem.hostF.norm(v).upper)

    rho_lo = rho_ratio(direct, np.outer(xi, x), np.outer(xi, y))
    rhob_lo = rho_ratio(lifted, j_map(np.outer(xi, x), j_copies), j_map(np.outer(xi, y), j_copies))
    R_lo = Rb_lo = 0.0
    worst_U = None
    for t in range(samples):
        if t == 0:
            U = np.kron(np.outer(xi, x), y[None, :]).reshape(d, -1)
        else:
            U = rng.standard_normal(direct.shape)
        up_d = tensor_norm_upper(U, direct, budget=budget, seed=seed + t)[0]
        up_j = tensor_norm_upper(j_map(U, j_copies), lifted, budget=budget, seed=seed + t)[0]
        val = cert.value(U, w, p)
        if up_d > 0:
            r = val / up_d
            if r > R_lo:
                R_lo, worst_U = r, U
        if up_j > 0:
            Rb_lo = max(Rb_lo, val / up_j)
    brackets = {
        "rho": NormEstimate(min(rho_lo, bound), bound, ("elementary-norming", "min-target-bound")),
        "rho_bar": NormEstimate(min(rhob_lo, bound), bound, ("elementary-norming", "q-contractive")),
        "R": NormEstimate(min(R_lo, bound), bound, ("sampled", "representation-bound")),
        "R_bar": NormEstimate(min(Rb_lo, bound), bound, ("sampled", "representation-bound")),
    }
    ok = _chain_consistent(brackets, tol)
    return _factorization_report(brackets, ok, samples, seed, tol, {"g": g, "h": h, "U": worst_U})


def _overlap(a: NormEstimate, b: NormEstimate, tol: float) -> bool:
    return a.lower <= b.upper + tol and b.lower <= a.upper + tol


def _chain_consistent(b: dict, tol: float) -> bool:
    return (
        _overlap(b["rho"], b["rho_bar"], tol)
        and _overlap(b["R"], b["rho"], tol)
        and b["R"].lower <= b["R_bar"].upper + tol
        and max(b["rho"].width, b["R"].width, b["rho_bar"].width) <= tol
    )


def _factorization_report(brackets, ok, samples, seed, tol, witness) -> CheckReport:
    gap = max(e.width for e in brackets.values())

    def reeval():
        return max(e.width for e in brackets.values())

    return CheckReport(
        name="universal_factorization",
        trials=samples,
        worst_ratio=gap,
        witness=witness,
        passed=bool(ok),
        tolerances={"tol": tol},
        seed=seed,
        notes=["worst_ratio holds the widest bracket gap"],
        details={k: v.to_dict() for k, v in brackets.items()},
        _reeval=reeval,
    )
