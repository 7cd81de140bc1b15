"""Inflations: a norm on the amplification over ``N`` copies of ``X``.

A simple element ``sum_k chi(Y_k) x_k`` over the copied space (``chi`` the
normalized indicator, ``Y_k`` disjoint) is normed by moving its supports into
``X``: pick disjoint ``Z_k`` in ``X`` and evaluate ``sum_k chi(Z_k) x_k`` in the
given structure on ``X``.  At full resolution every element of the model is
simple, so no completion step is needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lpcore import NormEstimate, operator_norm, span_functionals
from .measure import CopiedSpace, MeasurableSubset, disjoint_family
from .quantization import QuantizedSpace, j_map, q_map
from .report import CheckReport

TOL_INVARIANCE = 1e-9


def _indicator_coef(space, Z: MeasurableSubset, p: float) -> np.ndarray:
    c = np.zeros(space.dim)
    c[Z.sorted()] = Z.measure ** (-1.0 / p)
    return c


@dataclass(frozen=True, eq=False)
class SimpleAmplified:
    cs: CopiedSpace
    G: QuantizedSpace
    terms: tuple

    def __post_init__(self):
        terms = tuple((Y, np.asarray(x, dtype=float)) for Y, x in self.terms)
        seen: set[int] = set()
        for Y, x in terms:
            if Y.space != self.cs:
                raise ValueError("term subset belongs to a different space")
            if Y.measure <= 0:
                raise ValueError("degenerate subset: zero measure")
            if seen & Y.indices:
                raise ValueError("subsets overlap")
            seen |= Y.indices
            if x.shape != (self.G.underlying_dim,):
                raise ValueError("shape mismatch between term and G")
        object.__setattr__(self, "terms", terms)
        if self.G.base != self.cs.base:
            raise ValueError("G must live on the base of the copied space")

    @property
    def p(self) -> float:
        return self.G.p

    def coef(self) -> np.ndarray:
        out = np.zeros((self.cs.dim, self.G.underlying_dim))
        for Y, x in self.terms:
            out += np.outer(_indicator_coef(self.cs, Y, self.p), x)
        return out

    @classmethod
    def from_coef(cls, cs: CopiedSpace, G: QuantizedSpace, coef) -> "SimpleAmplified":
        """Group identical nonzero rows: each group is one term."""
        coef = np.asarray(coef, dtype=float)
        w = cs.weights
        groups: dict[bytes, list[int]] = {}
        rows = {}
        for i, r in enumerate(coef):
            if np.any(r):
                key = r.tobytes()
                groups.setdefault(key, []).append(i)
                rows[key] = r
        terms = []
        for key, idx in groups.items():
            mu = float(w[idx].sum())
            terms.append((MeasurableSubset(cs, idx), rows[key] * mu ** (1.0 / G.p)))
        return cls(cs, G, tuple(terms))

    def to_dict(self) -> dict:
        return {"terms": [{"subset": Y.sorted(), "x": x} for Y, x in self.terms]}


def transported(u: SimpleAmplified, seed: int | None = None):
    """``(v, Z)``: the transported element over ``X`` and the Z-family used."""
    X = u.cs.base
    n = len(u.terms)
    v = np.zeros((X.dim, u.G.underlying_dim))
    if n == 0:
        return v, []
    Z = disjoint_family(X, n, seed)
    for Zk, (_, x) in zip(Z, u.terms):
        v += np.outer(_indicator_coef(X, Zk, u.p), x)
    return v, Z


def inflation_norm_estimate(u: SimpleAmplified, seed: int | None = None) -> NormEstimate:
    v, _ = transported(u, seed)
    if not np.any(v):
        return NormEstimate.exact(0.0, "zero")
    return u.G.norm(v)


def inflation_norm(u: SimpleAmplified, seed: int | None = None) -> float:
    """``||sum chi(Z_k) x_k||`` in ``G`` for a Z-family drawn from ``seed``."""
    return inflation_norm_estimate(u, seed).upper


@dataclass(frozen=True, eq=False)
class InflationStructure:
    """The inflated norm on the amplification over ``copies`` copies of ``G.base``."""

    G: QuantizedSpace
    copies: int
    seed: int | None = None

    @property
    def cs(self) -> CopiedSpace:
        return CopiedSpace(self.G.base, self.copies)

    def simple(self, coef) -> SimpleAmplified:
        return SimpleAmplified.from_coef(self.cs, self.G, coef)

    def norm(self, coef) -> float:
        return inflation_norm(self.simple(coef), self.seed)

    def J(self, coef) -> np.ndarray:
        return j_map(coef, self.copies)

    def Q(self, coef) -> np.ndarray:
        return q_map(coef, self.G.base.dim)


def transport_operator(a, u: SimpleAmplified, seed: int | None = None):
    """The operator ``b`` on ``X`` that carries ``v`` (transport of ``u``) to the
    transport of ``a . u``.

    ``b = R a S`` where ``S`` sends ``chi(Z_k)`` to ``chi(Y_k)`` after the
    norm-one span projection onto ``span chi(Z_k)``, and ``R`` does the reverse
    for the groups of ``a . u``.  Both factors have norm at most one.
    """
    a = np.asarray(a, dtype=float)
    cs, X, p = u.cs, u.cs.base, u.p
    au = SimpleAmplified.from_coef(cs, u.G, a @ u.coef())
    _, Z = transported(u, seed)
    _, Z2 = transported(au, seed)
    S = np.zeros((cs.dim, X.dim))
    for f, (Y, _) in zip(span_functionals(X, Z, p), u.terms):
        S += np.outer(_indicator_coef(cs, Y, p), X.weights * f.coef)
    R = np.zeros((X.dim, cs.dim))
    if au.terms:
        fs = span_functionals(cs, [Y for Y, _ in au.terms], p)
        for f, Zk in zip(fs, Z2):
            R += np.outer(_indicator_coef(X, Zk, p), cs.weights * f.coef)
    return R @ a @ S, au


def inflation_action_check(a, u: SimpleAmplified, seed: int | None = None, tol: float = 1e-6) -> CheckReport:
    """``||a . u|| <= upper(||a||) ||u||`` in the inflated norm, with the transported ``b``."""
    a = np.asarray(a, dtype=float)
    cs = u.cs
    b, au = transport_operator(a, u, seed)
    nu = inflation_norm(u, seed)
    nau = inflation_norm(au, seed)
    na = operator_norm(a, u.p, w_in=cs.weights, w_out=cs.weights).upper
    v, _ = transported(u, seed)
    bv = b @ v
    consistency = float(np.abs(u.G.norm(bv).upper - nau)) if np.any(bv) else nau
    ratio = nau / (na * nu) if na * nu > 0 else (0.0 if nau == 0 else np.inf)

    def reeval():
        b2, au2 = transport_operator(a, u, seed)
        n1 = inflation_norm(au2, seed)
        n0 = inflation_norm(u, seed)
        d = operator_norm(a, u.p, w_in=cs.weights, w_out=cs.weights).upper * n0
        return n1 / d if d > 0 else (0.0 if n1 == 0 else np.inf)

    return CheckReport(
        name="inflation_action",
        trials=1,
        worst_ratio=ratio,
        witness={"a": a, "u": u.to_dict()},
        passed=bool(ratio <= 1 + 10 * tol),
        tolerances={"tol": tol, "fail_above": 1 + 10 * tol},
        seed=seed,
        details={
            "b": b,
            "transport_consistency": consistency,
            "norm_a_upper": na,
            "z_family": [Z.sorted() for Z in transported(u, seed)[1]],
        },
        _reeval=reeval,
    )


def random_simple(cs: CopiedSpace, G: QuantizedSpace, rng, max_terms: int | None = None, within=None) -> SimpleAmplified:
    """A random simple element with at most ``max_terms`` terms (default ``dim X``).

    ``within`` restricts the supports to a set of coordinates.
    """
    X = cs.base
    pool = np.arange(cs.dim) if within is None else np.asarray(sorted(within))
    cap = min(max_terms or X.dim, X.dim, len(pool))
    n = int(rng.integers(1, cap + 1))
    perm = rng.permutation(pool)
    used = int(rng.integers(n, len(pool) + 1))
    cuts = np.sort(rng.choice(np.arange(1, used), size=n - 1, replace=False)) if n > 1 else []
    groups = np.split(perm[:used], cuts)
    terms = tuple((MeasurableSubset(cs, g), rng.standard_normal(G.underlying_dim)) for g in groups)
    return SimpleAmplified(cs, G, terms)


def verify_inflation(G: QuantizedSpace, copies: int = 3, trials: int = 100, seed: int = 0, tol: float = 1e-9) -> CheckReport:
    """Check the inflation axioms on sampled simple elements.

    (i) ``J`` is isometric, (ii) ``Q`` is contractive and ``Q J = id``,
    (iii) transversally supported pairs satisfy the p-sum inequality, and
    nonzero elements have positive norm.
    """
    from .propsuite import check_contractibility

    rng = np.random.default_rng(np.random.SeedSequence([seed, 53]))
    cs = CopiedSpace(G.base, copies)
    X = G.base
    p = G.p
    notes = []
    pre = check_contractibility(G, trials=min(trials, 100), seed=seed)
    if not pre.passed:
        from .quantization import near_L_check

        nl = near_L_check(G, trials=min(trials, 100), seed=seed) if G.enorm is not None else None
        if nl is not None and nl.passed:
            notes.append("near-L input: inflation hypotheses not met")
        else:
            notes.append("input not an L-space")
    j_err = q_ratio = conv_ratio = 0.0
    qj_exact = True
    positive = True
    worst = {"j": None, "q": None, "conv": None}
    for t in range(trials):
        # (i) J isometric on elements over X
        u = random_simple(CopiedSpace(X, 1), G, rng)
        uc = u.coef()
        direct = G.norm(uc).upper
        ju = SimpleAmplified.from_coef(cs, G, j_map(uc, copies))
        err = abs(inflation_norm(ju, seed + t) - direct)
        if err > j_err:
            j_err, worst["j"] = err, uc
        qj_exact &= bool(np.array_equal(q_map(j_map(uc, copies), X.dim), uc))
        # (ii) Q contractive
        ub = random_simple(cs, G, rng)
        nb = inflation_norm(ub, seed + t)
        qc = q_map(ub.coef(), X.dim)
        nq = G.norm(qc).upper if np.any(qc) else 0.0
        positive &= nb > 0
        if nb > 0 and nq / nb > q_ratio:
            q_ratio, worst["q"] = nq / nb, (ub.coef(), seed + t)
        # (iii) p-convexity on transversal supports
        split = rng.permutation(cs.dim)
        cut = int(rng.integers(1, cs.dim))
        half = max(1, X.dim // 2)
        ua = random_simple(cs, G, rng, max_terms=half, within=split[:cut])
        va = random_simple(cs, G, rng, max_terms=X.dim - len(ua.terms), within=split[cut:]) if X.dim > len(ua.terms) else None
        if va is not None:
            s = SimpleAmplified.from_coef(cs, G, ua.coef() + va.coef())
            lhs = inflation_norm(s, seed + t) ** p
            rhs = inflation_norm(ua, seed + t) ** p + inflation_norm(va, seed + t) ** p
            if rhs > 0 and lhs / rhs > conv_ratio:
                conv_ratio, worst["conv"] = lhs / rhs, (ua.coef(), va.coef(), seed + t)
    passed = j_err <= tol and qj_exact and q_ratio <= 1 + tol and conv_ratio <= 1 + 1e-6 and positive
    details = {
        "j_isometry_max_error": j_err,
        "qj_identity_exact": qj_exact,
        "q_worst_ratio": q_ratio,
        "p_convexity_worst_ratio": conv_ratio,
        "positive_on_nonzero": positive,
        "contractibility_precheck": pre.passed,
        "copies": copies,
    }
    if G.kind == "vector_valued":
        ub = random_simple(cs, G, rng)
        from .quantization import vector_valued

        direct = vector_valued(cs, p, G.enorm).norm(ub.coef()).upper
        details["matches_bochner_over_copies"] = abs(direct - inflation_norm(ub, seed)) <= tol * max(1, direct)

    def reeval():
        out = 0.0
        if worst["q"] is not None:
            c, s = worst["q"]
            qc = q_map(c, X.dim)
            nq = G.norm(qc).upper if np.any(qc) else 0.0
            out = max(out, nq / inflation_norm(SimpleAmplified.from_coef(cs, G, c), s))
        if worst["conv"] is not None:
            ca, cb, s = worst["conv"]
            n = lambda c: inflation_norm(SimpleAmplified.from_coef(cs, G, c), s)
            out = max(out, n(ca + cb) ** p / (n(ca) ** p + n(cb) ** p))
        return out

    return CheckReport(
        name="verify_inflation",
        trials=trials,
        worst_ratio=max(q_ratio, conv_ratio),
        witness={k: v for k, v in worst.items() if v is not None},
        passed=bool(passed),
        tolerances={"tol": tol, "p_convexity_slack": 1e-6},
        seed=seed,
        notes=notes,
        details=details,
        _reeval=reeval,
    )


def resolution_trace(make_G, resolutions, copies: int = 2, trials: int = 50, seed: int = 0) -> dict:
    """Run :func:`verify_inflation` at several model resolutions.

    ``make_G(m)`` builds the structure on a base with resolution ``m``.  The
    trace is empirical: nothing here bounds the distance to the limit.
    """
    out = {}
    for m in resolutions:
        rep = verify_inflation(make_G(m), copies=copies, trials=trials, seed=seed)
        d = rep.details
        out[m] = {
            "passed": rep.passed,
            "j_isometry_max_error": d["j_isometry_max_error"],
            "q_worst_ratio": d["q_worst_ratio"],
            "p_convexity_worst_ratio": d["p_convexity_worst_ratio"],
        }
    return out
