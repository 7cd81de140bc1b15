"""Sampled property checks.

Operators are drawn as random matrices, projections, isometries and rank-one
maps in proportion 2:1:1:1.  A check fails only when its worst ratio exceeds
``1 + 10 tol``.  Every report carries a witness that re-evaluates to the
recorded ratio.
"""
from __future__ import annotations

import numpy as np

from .lpcore import operator_norm, span_projection
from .measure import MeasurableSubset, disjoint_family
from .quantization import QuantizedSpace, amplify_operator, j_map
from .report import CheckReport
from .tensor import (
    apply_maps,
    best_scalar_certificate,
    direct_problem,
    identity_certificate,
    j_problem,
    merge_disjoint,
    tensor_norm_lower,
    tensor_norm_upper,
    transport_maps,
)

__all__ = [
    "CheckReport",
    "check_contractibility",
    "check_metric_mapping",
    "check_p_convexity",
    "check_tensor_p_convexity",
    "find_remark22_witness",
    "hadamard_witness",
    "sample_operator",
]

OPERATOR_KINDS = ("random", "random", "projection", "isometry", "rank_one")
TOL = 1e-6


def _equal_weight_classes(weights) -> list[np.ndarray]:
    classes: dict[float, list[int]] = {}
    for i, w in enumerate(weights):
        classes.setdefault(float(w), []).append(i)
    return [np.asarray(c) for c in classes.values()]


def sample_operator(space, rng, kind: str, p: float | None = None) -> np.ndarray:
    """A random operator of the given kind; ``p = 2`` widens isometries to
    orthogonal maps within classes of equal weight."""
    d = space.dim
    w = space.weights
    if kind == "random":
        return rng.standard_normal((d, d))
    if kind == "projection":
        if rng.random() < 0.5:
            return np.diag((rng.random(d) < 0.5).astype(float))
        n = int(rng.integers(1, d + 1))
        fam = disjoint_family(space, n, int(rng.integers(2**31)))
        return span_projection(space, fam, 2.0).matrix
    if kind == "isometry":
        # signed permutation inside classes of equal weight
        m = np.zeros((d, d))
        for cls in _equal_weight_classes(w):
            if p == 2 and len(cls) > 1:
                q, r = np.linalg.qr(rng.standard_normal((len(cls), len(cls))))
                m[np.ix_(cls, cls)] = q * np.sign(np.diag(r))
            else:
                perm = rng.permutation(cls)
                m[perm, cls] = rng.choice([-1.0, 1.0], size=len(cls))
        return m
    if kind == "rank_one":
        return np.outer(rng.standard_normal(d), rng.standard_normal(d))
    raise ValueError(f"unknown operator kind {kind!r}")


def _sample_element(rng, shape, t: int) -> np.ndarray:
    u = rng.standard_normal(shape)
    if t % 3 == 1:
        u[rng.random(shape[0]) < 0.5] = 0.0
    elif t % 3 == 2:
        u = np.outer(rng.standard_normal(shape[0]), rng.standard_normal(shape[1]))
    if not np.any(u):
        u[0, 0] = 1.0
    return u / np.abs(u).max()


def _module_ratio(host: QuantizedSpace, a, u) -> float:
    na = operator_norm(a, host.p, w_in=host.base.weights, w_out=host.base.weights, upper_only=True).upper
    nu = host.norm(u).upper
    if na == 0 or nu == 0:
        return 0.0
    return host.norm(a @ u).lower / (na * nu)


def check_contractibility(
    host: QuantizedSpace, trials: int = 1000, seed: int = 0, tol: float = TOL, kinds: tuple = OPERATOR_KINDS
) -> CheckReport:
    """``lower(||a . u||) / (upper(||a||) upper(||u||))`` over sampled ``(a, u)``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 61]))
    worst, wit = 0.0, None
    probe = _hadamard_probe(host) if kinds == OPERATOR_KINDS else None
    for t in range(trials):
        kind = kinds[t % len(kinds)]
        if t == 0 and probe is not None:
            (a, u), kind = probe, "hadamard"
        else:
            a = sample_operator(host.base, rng, kind, host.p)
            u = _sample_element(rng, host.shape, t)
        r = _module_ratio(host, a, u)
        if wit is None or r > worst:
            worst, wit = r, (a, u, kind)
    a, u, kind = wit
    return CheckReport(
        name="contractibility" if kinds == OPERATOR_KINDS else f"contractibility[{','.join(sorted(set(kinds)))}]",
        trials=trials,
        worst_ratio=worst,
        witness={"a": a, "u": u, "operator_kind": kind},
        passed=bool(worst <= 1 + 10 * tol),
        tolerances={"tol": tol, "fail_above": 1 + 10 * tol},
        seed=seed,
        details={"host": host.describe(), "operator_mix": list(kinds)},
        _reeval=lambda: _module_ratio(host, a, u),
    )


def _hadamard_probe(host):
    # the fixed witness against full contractibility, where the shapes allow it
    d, n = host.shape
    w = host.base.weights
    if d != n or d < 2 or d & (d - 1) or not np.all(w == w[0]):
        return None
    return hadamard_witness(d)


def _transversal_pair(rng, shape):
    d = shape[0]
    perm = rng.permutation(d)
    cut = int(rng.integers(1, d)) if d > 1 else 1
    Z1, Z2 = perm[:cut], perm[cut:]
    u = np.zeros(shape)
    v = np.zeros(shape)
    u[Z1] = rng.standard_normal((len(Z1), shape[1]))
    v[Z2] = rng.standard_normal((len(Z2), shape[1]))
    return u, v, Z1, Z2


def _pconv_ratio(host, u, v) -> float:
    p = host.p
    rhs = host.norm(u).upper ** p + host.norm(v).upper ** p
    if rhs == 0:
        return 0.0
    return host.norm(u + v).lower ** p / rhs


def check_p_convexity(host: QuantizedSpace, trials: int = 500, seed: int = 0, tol: float = TOL) -> CheckReport:
    """``||u + v||^p <= ||u||^p + ||v||^p`` for supports on disjoint subsets."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 67]))
    worst, wit = 0.0, None
    for _ in range(trials):
        u, v, Z1, Z2 = _transversal_pair(rng, host.shape)
        r = _pconv_ratio(host, u, v)
        if wit is None or r > worst:
            worst, wit = r, (u, v)
    u, v = wit
    return CheckReport(
        name="p_convexity",
        trials=trials,
        worst_ratio=worst,
        witness={"u": u, "v": v},
        passed=bool(worst <= 1 + 10 * tol),
        tolerances={"tol": tol, "fail_above": 1 + 10 * tol},
        seed=seed,
        notes=["ratio is ||u+v||^p / (||u||^p + ||v||^p)"],
        details={"host": host.describe()},
        _reeval=lambda: _pconv_ratio(host, u, v),
    )


def _tensor_problem(hostE, hostF, route):
    if route == "auto":
        route = "direct" if hostE.base.convenient else "j"
    if route == "direct":
        return direct_problem(hostE, hostF), None
    pr = j_problem(hostE, hostF)
    return pr, pr.hostE.base.copies


def check_tensor_p_convexity(
    hostE: QuantizedSpace,
    hostF: QuantizedSpace,
    trials: int = 500,
    seed: int = 0,
    tol: float = TOL,
    budget: int = 0,
    route: str = "auto",
) -> CheckReport:
    """p-convexity of the computed tensor structure by merging representations.

    For ``U, V`` supported on disjoint subsets the merged representation gives
    ``upper(U + V)``; the ratio compares its p-th power with
    ``upper(U)^p + upper(V)^p``.  As a soundness cross-check the certificate
    lower bound of ``U + V`` must not exceed the merged cost.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 71]))
    problem, nj = _tensor_problem(hostE, hostF, route)
    p = problem.p
    X = hostE.base
    shape = (X.dim, problem.nE * problem.nF)
    worst, wit, sound = 0.0, None, True

    def evaluate(U, V, Z1, Z2, t):
        if nj is not None:
            U, V = j_map(U, nj), j_map(V, nj)
        cu, ru, _ = tensor_norm_upper(U, problem, budget=budget, seed=seed + t)
        cv, rv, _ = tensor_norm_upper(V, problem, budget=budget, seed=seed + t)
        S1 = MeasurableSubset(problem.output, Z1)
        S2 = MeasurableSubset(problem.output, Z2)
        merged, cost = merge_disjoint(ru, S1, rv, S2)
        if np.abs(merged.value() - (U + V)).max() > 1e-9 * max(1.0, np.abs(U + V).max()):
            return np.inf, cost, U + V
        den = cu**p + cv**p
        return (cost**p / den if den > 0 else 0.0), cost, U + V

    for t in range(trials):
        U, V, Z1, Z2 = _transversal_pair(rng, shape)
        r, cost, W = evaluate(U, V, Z1, Z2, t)
        if t % 10 == 0:
            certs = [best_scalar_certificate(W, problem, 2, seed + t), identity_certificate(problem, verify=0)]
            lo, _ = tensor_norm_lower(W, certs, problem)
            sound &= lo <= cost * (1 + 1e-9) + 1e-12
        if wit is None or r > worst:
            worst, wit = r, (U, V, Z1, Z2, t)
    U, V, Z1, Z2, t = wit
    return CheckReport(
        name="tensor_p_convexity",
        trials=trials,
        worst_ratio=worst,
        witness={"U": U, "V": V, "Z1": Z1, "Z2": Z2},
        passed=bool(worst <= 1 + 10 * tol and sound),
        tolerances={"tol": tol, "fail_above": 1 + 10 * tol},
        seed=seed,
        notes=["upper(U+V) from the merged representation"],
        details={"lower_le_merged_upper": sound, "budget": budget},
        _reeval=lambda: evaluate(U, V, Z1, Z2, t)[0],
    )


def check_metric_mapping(
    hostE: QuantizedSpace,
    hostF: QuantizedSpace,
    hostE2: QuantizedSpace | None = None,
    hostF2: QuantizedSpace | None = None,
    phi=None,
    psi=None,
    trials: int = 200,
    seed: int = 0,
    tol: float = TOL,
    budget: int = 0,
) -> CheckReport:
    """``upper((phi (x) psi)_inf U) <= upper||phi_inf|| upper||psi_inf|| upper(U)``.

    The left side is the cost of the transported best representation of
    ``U``; maps not given are sampled per trial and scaled to norm one.
    """
    hostE2 = hostE2 or hostE
    hostF2 = hostF2 or hostF
    rng = np.random.default_rng(np.random.SeedSequence([seed, 73]))
    problem = direct_problem(hostE, hostF)
    worst, wit = 0.0, None
    cache: dict = {}

    def amp(m, h1, h2):
        key = (m.tobytes(), id(h1), id(h2))
        if key not in cache:
            cache[key] = amplify_operator(m, h1, h2, trials=0)[1]
        return cache[key]

    def evaluate(ph, ps, U, t):
        cu, rep, _ = tensor_norm_upper(U, problem, budget=budget, seed=seed + t)
        if cu == 0:
            return 0.0, {}
        moved = transport_maps(rep, ph, ps, hostE2, hostF2)
        if np.abs(moved.value() - apply_maps(U, ph, ps)).max() > 1e-9 * max(1.0, np.abs(U).max()):
            return np.inf, {}
        bound = amp(ph, hostE, hostE2).upper * amp(ps, hostF, hostF2).upper * cu
        if bound == 0:
            return 0.0, {}
        return moved.cost(True) / bound, {"phi_amp": amp(ph, hostE, hostE2), "psi_amp": amp(ps, hostF, hostF2)}

    for t in range(trials):
        ph = phi if phi is not None else rng.standard_normal((hostE2.underlying_dim, hostE.underlying_dim))
        ps = psi if psi is not None else rng.standard_normal((hostF2.underlying_dim, hostF.underlying_dim))
        ph, ps = np.asarray(ph, dtype=float), np.asarray(ps, dtype=float)
        U = _sample_element(rng, problem.shape, t)
        r, info = evaluate(ph, ps, U, t)
        if wit is None or r > worst:
            worst, wit = r, (ph, ps, U, t, info)
    ph, ps, U, t, info = wit
    return CheckReport(
        name="metric_mapping",
        trials=trials,
        worst_ratio=worst,
        witness={"phi": ph, "psi": ps, "U": U},
        passed=bool(worst <= 1 + 10 * tol),
        tolerances={"tol": tol, "fail_above": 1 + 10 * tol},
        seed=seed,
        details={k: v.to_dict() for k, v in info.items()},
        _reeval=lambda: evaluate(ph, ps, U, t)[0],
    )


def hadamard_witness(dim: int = 2):
    """``(a, u)``: normalized Sylvester-Hadamard ``a`` and ``u = sum_i e_i (x) e_i``."""
    if dim < 1 or dim & (dim - 1):
        raise ValueError("dimension must be a power of two")
    H = np.ones((1, 1))
    while H.shape[0] < dim:
        H = np.block([[H, H], [H, -H]])
    return H / np.sqrt(dim), np.eye(dim)


def _vv_ratio(host, a, u) -> float:
    return _module_ratio(host, a, u)


def find_remark22_witness(
    host: QuantizedSpace, budget: int = 200, seed: int = 0, tol: float = TOL, rank_one_only: bool = False
) -> CheckReport:
    """Search ``(a, u)`` maximizing ``||a . u|| / (upper||a|| ||u||)``.

    Starts include the Hadamard-type pair when the shapes allow it, then
    random starts refined by a seeded hill climb.  With ``rank_one_only`` the
    operators are restricted to rank one (the near-L regime).
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 79]))
    d, n = host.shape
    starts = []
    if not rank_one_only and d == n and d & (d - 1) == 0:
        starts.append(hadamard_witness(d))
    for t in range(8):
        a = sample_operator(host.base, rng, "rank_one" if rank_one_only else "random", host.p)
        starts.append((a, rng.standard_normal((d, n))))

    def project(a):
        if rank_one_only:
            U, s, Vt = np.linalg.svd(a)
            return s[0] * np.outer(U[:, 0], Vt[0])
        return a

    best, wit = -1.0, None
    per_start = max(budget // max(len(starts), 1), 1)
    for a, u in starts:
        a = project(a)
        r = _vv_ratio(host, a, u)
        step = 0.3
        for _ in range(per_start):
            a2 = project(a + step * rng.standard_normal(a.shape) * np.abs(a).max())
            u2 = u + step * rng.standard_normal(u.shape) * np.abs(u).max()
            r2 = _vv_ratio(host, a2, u2)
            if r2 > r:
                a, u, r = a2, u2, r2
                step = min(step * 1.3, 1.0)
            else:
                step = max(step * 0.8, 1e-4)
        if r > best:
            best, wit = r, (a, u)
    a, u = wit
    return CheckReport(
        name="remark22_witness" + ("[rank-one]" if rank_one_only else ""),
        trials=budget,
        worst_ratio=best,
        witness={"a": a, "u": u},
        passed=bool(best <= 1 + 10 * tol),
        tolerances={"tol": tol, "fail_above": 1 + 10 * tol},
        seed=seed,
        notes=["passed means no contractibility violation was found"],
        details={"host": host.describe(), "violation_found": bool(best > 1 + 10 * tol)},
        _reeval=lambda: _vv_ratio(host, a, u),
    )
