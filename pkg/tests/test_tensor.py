import json
import warnings

import numpy as np
import pytest

from pconvex.banach import WeightedLr
from pconvex.lpcore import weighted_norm
from pconvex.measure import MeasurableSubset, MeasureSpace
from pconvex.quantization import max_space, min_space, scalar_space, vector_valued
from pconvex.report import to_jsonable
from pconvex.tensor import (
    InsufficientCopiesError,
    apply_maps,
    decompose,
    direct_problem,
    identity_certificate,
    merge_disjoint,
    pconvex_tensor_space,
    scalar_certificate,
    seed_representations,
    tensor_norm,
    tensor_norm_lower,
    tensor_norm_upper,
    transport_maps,
    transport_module,
    universal_factorization_check,
)

CELLS = MeasureSpace((), 4, 0.5)
ATOMS = MeasureSpace(((0, 1.0), (1, 1.0)))


def elementary(xi, x, y):
    return np.kron(np.outer(xi, x), np.asarray(y)[None, :])


def min_pair(space, p):
    return min_space(space, p, WeightedLr(1.0, 2)), min_space(space, p, WeightedLr(2.0, 2))


@pytest.mark.parametrize("space", [CELLS, ATOMS], ids=["cells", "atoms"])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_elementary_tensor_min_factors(space, p):
    hE, hF = min_pair(space, p)
    rng = np.random.default_rng(int(10 * p))
    xi, x, y = rng.standard_normal(space.dim), rng.standard_normal(2), rng.standard_normal(2)
    truth = weighted_norm(xi, space.weights, p) * hE.enorm(x) * hF.enorm(y)
    est = tensor_norm(elementary(xi, x, y), hE, hF, budget=8).estimate
    assert est.contains(truth, 1e-9 * truth)
    assert est.width <= 1e-3


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_scalar_factors(p):
    h = scalar_space(CELLS, p)
    xi = np.array([1.0, -2.0, 0.0, 0.5])
    est = tensor_norm(xi, h, h, budget=4).estimate
    truth = weighted_norm(xi, CELLS.weights, p)
    assert est.contains(truth, 1e-9)
    assert est.width <= 1e-4


@pytest.mark.parametrize("seed", range(4))
def test_random_bracket_and_trace(seed):
    p = [1.5, 2.0, 3.0, 2.5][seed]
    hE, hF = min_pair(CELLS, p)
    U = np.random.default_rng(seed).standard_normal((4, 4))
    res = tensor_norm(U, hE, hF, budget=8, seed=seed)
    est = res.estimate
    assert est.lower <= est.upper + 1e-6
    trace = [res.trace[N] for N in sorted(res.trace)]
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert trace[-1] == pytest.approx(est.upper)
    assert res.copies_used <= 8


def test_seeds_reconstruct():
    hE, hF = min_pair(CELLS, 1.5)
    pr = direct_problem(hE, hF)
    U = np.random.default_rng(3).standard_normal((4, 4))
    seeds = seed_representations(U, pr)
    assert len(seeds) >= 3
    for rep in seeds:
        assert np.allclose(rep.value(), U, atol=1e-10)


def test_certificate_below_every_representation():
    hE, hF = min_pair(CELLS, 3.0)
    pr = direct_problem(hE, hF)
    U = np.random.default_rng(4).standard_normal((4, 4))
    est = tensor_norm(U, hE, hF, budget=8).estimate
    for rep in seed_representations(U, pr):
        assert est.lower <= rep.cost() * (1 + 1e-12)


def test_budget_monotone():
    hE, hF = min_pair(CELLS, 1.5)
    pr = direct_problem(hE, hF)
    U = np.random.default_rng(5).standard_normal((4, 4))
    ups = [tensor_norm_upper(U, pr, budget=b, seed=1)[0] for b in (0, 8, 24)]
    assert ups[1] <= ups[0] and ups[2] <= ups[1]


def test_routes_agree_on_convenient_space():
    hE, hF = min_pair(CELLS, 2.0)
    U = np.random.default_rng(6).standard_normal((4, 4))
    d = tensor_norm(U, hE, hF, budget=8, route="direct").estimate
    j = tensor_norm(U, hE, hF, budget=8, route="j").estimate
    assert d.lower <= j.upper + 1e-9 and j.lower <= d.upper + 1e-9


def test_insufficient_copies():
    hE, hF = min_pair(CELLS, 2.0)
    pr = direct_problem(hE, hF)
    with pytest.raises(InsufficientCopiesError, match="insufficient copies"):
        decompose(np.ones((4, 4)), pr, copies=2)


def test_zero_element():
    hE, hF = min_pair(CELLS, 2.0)
    res = tensor_norm(np.zeros((4, 4)), hE, hF)
    assert res.estimate.upper == 0.0 and res.estimate.is_exact


def test_errors():
    hE, hF = min_pair(CELLS, 2.0)
    with pytest.raises(ValueError):
        tensor_norm(np.zeros((3, 4)), hE, hF)
    with pytest.raises(ValueError):
        tensor_norm(np.ones((4, 4)), hE, hF, route="sideways")
    with pytest.raises(ValueError):
        direct_problem(hE, min_space(CELLS, 3.0, WeightedLr(1.0, 2)))


def test_identity_certificate_applicability():
    v = vector_valued(CELLS, 2.0, WeightedLr(2.0, 2))
    cert = identity_certificate(direct_problem(v, v))
    assert cert is not None and cert.verified_amp_bound == 1.0
    m = max_space(CELLS, 2.0, WeightedLr(2.0, 2))
    assert identity_certificate(direct_problem(m, v)) is not None
    hE, hF = min_pair(CELLS, 2.0)
    assert identity_certificate(direct_problem(hE, hF)) is None


def test_bochner_factors_elementary():
    v = vector_valued(CELLS, 1.5, WeightedLr(3.0, 2))
    rng = np.random.default_rng(8)
    xi, x, y = rng.standard_normal(4), rng.standard_normal(2), rng.standard_normal(2)
    truth = weighted_norm(xi, CELLS.weights, 1.5) * v.enorm(x) * v.enorm(y)
    est = tensor_norm(elementary(xi, x, y), v, v, budget=8).estimate
    assert est.contains(truth, 1e-9 * truth)


def test_no_certificate_warns():
    hE, hF = min_pair(CELLS, 2.0)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        lo, cert = tensor_norm_lower(np.ones((4, 4)), [None], direct_problem(hE, hF))
    assert lo == 0.0 and cert is None and rec


def test_transport_module():
    hE, hF = min_pair(CELLS, 1.5)
    pr = direct_problem(hE, hF)
    U = np.random.default_rng(9).standard_normal((4, 4))
    up, rep, _ = tensor_norm_upper(U, pr, budget=4)
    a = np.random.default_rng(10).standard_normal((4, 4))
    moved, bound = transport_module(rep, a)
    assert np.allclose(moved.value(), a @ U)
    assert bound <= moved.cost() + 1e-12


def test_merge_disjoint():
    hE, hF = min_pair(CELLS, 3.0)
    pr = direct_problem(hE, hF)
    rng = np.random.default_rng(11)
    U, V = np.zeros((4, 4)), np.zeros((4, 4))
    U[:2], V[2:] = rng.standard_normal((2, 4)), rng.standard_normal((2, 4))
    cu, ru, _ = tensor_norm_upper(U, pr, budget=4)
    cv, rv, _ = tensor_norm_upper(V, pr, budget=4)
    merged, cost = merge_disjoint(ru, MeasurableSubset(CELLS, [0, 1]), rv, MeasurableSubset(CELLS, [2, 3]))
    assert np.allclose(merged.value(), U + V)
    assert cost**3 <= (cu**3 + cv**3) * (1 + 1e-9)
    with pytest.raises(ValueError):
        merge_disjoint(ru, MeasurableSubset(CELLS, [0, 1]), rv, MeasurableSubset(CELLS, [1, 2]))


def test_transport_maps():
    hE, hF = min_pair(CELLS, 2.0)
    pr = direct_problem(hE, hF)
    rng = np.random.default_rng(12)
    U = rng.standard_normal((4, 4))
    _, rep, _ = tensor_norm_upper(U, pr, budget=4)
    phi, psi = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    moved = transport_maps(rep, phi, psi, hE, hF)
    assert np.allclose(moved.value(), apply_maps(U, phi, psi))


def test_tensor_host():
    hE, hF = min_pair(CELLS, 2.0)
    T = pconvex_tensor_space(hE, hF, budget=4)
    assert T.underlying_dim == 4 and T.shape == (4, 4)
    xi = np.array([1.0, 0.0, 2.0, 0.0])
    est = T.norm(elementary(xi, [1.0, 0.0], [0.0, 1.0]))
    assert est.contains(weighted_norm(xi, CELLS.weights, 2.0), 1e-9)


def test_result_serializes():
    hE, hF = min_pair(CELLS, 2.0)
    res = tensor_norm(np.eye(4), hE, hF, budget=2)
    d = json.loads(json.dumps(to_jsonable(res)))
    assert d["estimate"]["upper"] == pytest.approx(res.estimate.upper)
    assert set(d["trace"]) == {str(n) for n in range(1, 9)}


@pytest.mark.parametrize("seed", range(3))
def test_universal_factorization(seed):
    hE, hF = min_pair(ATOMS, 2.0)
    rng = np.random.default_rng(seed)
    cert = scalar_certificate(rng.standard_normal(2), rng.standard_normal(2), direct_problem(hE, hF))
    rep = universal_factorization_check(cert, hE, hF, samples=6, seed=seed)
    assert rep.passed, rep.details
    assert rep.reevaluate() == pytest.approx(rep.worst_ratio, abs=1e-12)
