import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from pconvex.banach import WeightedLr
from pconvex.lpcore import operator_norm, weighted_norm
from pconvex.measure import MeasureSpace
from pconvex.propsuite import (
    OPERATOR_KINDS,
    _transversal_pair,
    check_contractibility,
    check_metric_mapping,
    check_p_convexity,
    check_tensor_p_convexity,
    find_remark22_witness,
    hadamard_witness,
    sample_operator,
)
from pconvex.quantization import min_space, scalar_space, vector_valued


def unit_atoms(n):
    return MeasureSpace(tuple((i, 1.0) for i in range(n)))


CELLS = MeasureSpace((), 4, 0.5)


def test_hadamard_witness_values():
    # ||u|| = sqrt(2), ||a|| = 1, ||a u|| = 2 in L_2(l_1^2)
    a, u = hadamard_witness(2)
    w = np.ones(2)
    E = WeightedLr(1.0, 2)
    assert weighted_norm(E(u), w, 2) == pytest.approx(np.sqrt(2))
    assert operator_norm(a, 2.0).upper == pytest.approx(1.0)
    assert weighted_norm(E(a @ u), w, 2) == pytest.approx(2.0)
    a4, u4 = hadamard_witness(4)
    E4 = WeightedLr(1.0, 4)
    assert weighted_norm(E4(a4 @ u4), np.ones(4), 2) / weighted_norm(E4(u4), np.ones(4), 2) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        hadamard_witness(3)


@given(
    hnp.arrays(float, (2, 2), elements=st.floats(-1, 1, allow_nan=False)),
    hnp.arrays(float, (2, 2), elements=st.floats(-1, 1, allow_nan=False)),
)
def test_vv_l1_two_dim_ratio_below_sqrt2(a, u):
    # l_1^2 is sqrt(2)-isomorphic to l_2^2, so a (x) id has norm <= sqrt(2) ||a||
    E = WeightedLr(1.0, 2)
    nu = weighted_norm(E(u), np.ones(2), 2)
    na = np.linalg.norm(a, 2)
    if nu * na < 1e-9:
        return
    assert weighted_norm(E(a @ u), np.ones(2), 2) <= np.sqrt(2) * na * nu * (1 + 1e-12) + 1e-15


def test_contractibility_min_passes():
    rep = check_contractibility(min_space(CELLS, 2.0, WeightedLr(1.0, 2)), trials=200, seed=3)
    assert rep.passed
    assert rep.reevaluate() == pytest.approx(rep.worst_ratio, abs=1e-12)


def test_contractibility_scalars():
    rep = check_contractibility(scalar_space(CELLS, 3.0), trials=100, seed=1)
    assert rep.passed and rep.worst_ratio <= 1 + 1e-9


@pytest.mark.parametrize("n, ratio", [(2, np.sqrt(2)), (4, 2.0)])
def test_contractibility_vv_l1_fails_at_hadamard(n, ratio):
    rep = check_contractibility(vector_valued(unit_atoms(n), 2.0, WeightedLr(1.0, n)), trials=50, seed=0)
    assert not rep.passed
    assert rep.witness["operator_kind"] == "hadamard"
    assert rep.worst_ratio == pytest.approx(ratio, abs=1e-12)
    assert rep.reevaluate() == pytest.approx(rep.worst_ratio, abs=1e-12)


def test_contractibility_vv_rank_one_passes():
    rep = check_contractibility(vector_valued(unit_atoms(2), 2.0, WeightedLr(1.0, 2)), 200, 0, kinds=("rank_one",))
    assert rep.passed


@pytest.mark.parametrize("kind", OPERATOR_KINDS[1:])
@pytest.mark.parametrize("p", [1.5, 2.0])
def test_sample_operator_kinds(kind, p):
    sp = MeasureSpace(((0, 0.5), (1, 0.5)), 3, 0.4)
    rng = np.random.default_rng(0)
    a = sample_operator(sp, rng, kind, p)
    if kind == "projection":
        assert np.allclose(a @ a, a)
        assert operator_norm(a, p, sp.weights, sp.weights).upper <= 1 + 1e-6
    if kind == "isometry":
        x = rng.standard_normal(sp.dim)
        assert weighted_norm(a @ x, sp.weights, p) == pytest.approx(weighted_norm(x, sp.weights, p))
    if kind == "rank_one":
        assert np.linalg.matrix_rank(a) == 1
    with pytest.raises(ValueError):
        sample_operator(sp, rng, "shear")


@pytest.mark.parametrize("kind", ["min", "vector_valued"])
def test_p_convexity_passes(kind):
    from pconvex.quantization import QuantizedSpace

    h = QuantizedSpace(CELLS, 1.5, kind, WeightedLr(1.0, 2))
    rep = check_p_convexity(h, trials=100, seed=2)
    assert rep.passed
    assert rep.reevaluate() == pytest.approx(rep.worst_ratio, abs=1e-12)


def test_transversal_pairs_are_disjoint():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u, v, Z1, Z2 = _transversal_pair(rng, (5, 2))
        assert not set(Z1) & set(Z2)
        assert not np.any(np.any(u, axis=1) & np.any(v, axis=1))


def test_overlapping_supports_not_asserted():
    # equal supports can violate the p-sum inequality; the suite never samples them
    h = vector_valued(CELLS, 3.0, WeightedLr(1.0, 2))
    u = np.zeros((4, 2))
    u[0] = [1.0, 0.0]
    lhs = h.norm(2 * u).upper ** 3
    assert lhs > 2 * h.norm(u).upper ** 3
    assert check_p_convexity(h, trials=50, seed=0).passed


def test_tensor_p_convexity():
    hE = min_space(CELLS, 1.5, WeightedLr(1.0, 2))
    hF = min_space(CELLS, 1.5, WeightedLr(2.0, 2))
    rep = check_tensor_p_convexity(hE, hF, trials=20, seed=0)
    assert rep.passed and rep.details["lower_le_merged_upper"]
    assert rep.reevaluate() == pytest.approx(rep.worst_ratio, abs=1e-12)


def test_metric_mapping_identity_and_scaling():
    hE = min_space(CELLS, 2.0, WeightedLr(1.0, 2))
    hF = min_space(CELLS, 2.0, WeightedLr(2.0, 2))
    rep = check_metric_mapping(hE, hF, phi=np.eye(2), psi=np.eye(2), trials=10, seed=0)
    assert rep.worst_ratio <= 1 + 1e-6
    rep3 = check_metric_mapping(hE, hF, phi=3 * np.eye(2), psi=np.eye(2), trials=10, seed=0)
    assert rep3.worst_ratio == pytest.approx(rep.worst_ratio, rel=1e-9)


def test_metric_mapping_random():
    hE = min_space(CELLS, 1.5, WeightedLr(1.0, 2))
    hF = min_space(CELLS, 1.5, WeightedLr(2.0, 2))
    rep = check_metric_mapping(hE, hF, trials=20, seed=1)
    assert rep.passed
    assert rep.reevaluate() == pytest.approx(rep.worst_ratio, abs=1e-12)


def test_witness_search_two_dim():
    rep = find_remark22_witness(vector_valued(unit_atoms(2), 2.0, WeightedLr(1.0, 2)), budget=60, seed=0)
    assert rep.details["violation_found"]
    assert rep.worst_ratio >= np.sqrt(2) - 1e-9
    assert rep.worst_ratio <= np.sqrt(2) + 1e-9


def test_witness_search_four_dim():
    rep = find_remark22_witness(vector_valued(unit_atoms(4), 2.0, WeightedLr(1.0, 4)), budget=40, seed=0)
    assert rep.worst_ratio >= 2 - 1e-6


def test_witness_search_scalars_and_rank_one():
    rep = find_remark22_witness(scalar_space(unit_atoms(2), 2.0), budget=40, seed=0)
    assert rep.worst_ratio <= 1 + 1e-6 and rep.passed
    h = vector_valued(unit_atoms(2), 2.0, WeightedLr(1.0, 2))
    rep = find_remark22_witness(h, budget=60, seed=0, rank_one_only=True)
    assert rep.passed and rep.worst_ratio <= 1 + 1e-6
