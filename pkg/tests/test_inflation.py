import numpy as np
import pytest

from pconvex.banach import WeightedLr
from pconvex.lpcore import span_projection
from pconvex.measure import CopiedSpace, InsufficientResolutionError, MeasurableSubset, MeasureSpace
from pconvex.quantization import min_space, vector_valued
from pconvex.inflation import (
    InflationStructure,
    SimpleAmplified,
    inflation_action_check,
    inflation_norm,
    random_simple,
    resolution_trace,
    transported,
    verify_inflation,
)

CELLS = MeasureSpace((), 4, 0.25)
MIXED = MeasureSpace(((0, 0.5),), 4, 0.25)


def test_splitting_golden():
    G = min_space(CELLS, 2.0, WeightedLr(1.0, 2))
    cs = CopiedSpace(CELLS, 2)
    x = np.array([1.0, 2.0])
    whole = SimpleAmplified(cs, G, ((MeasurableSubset(cs, [4, 5, 6]), x),))
    split = SimpleAmplified(
        cs, G, ((MeasurableSubset(cs, [4]), 0.6 * x), (MeasurableSubset(cs, [5, 6]), 0.8 * x))
    )
    assert inflation_norm(whole, 0) == pytest.approx(3.0, abs=1e-12)
    assert inflation_norm(split, 0) == pytest.approx(3.0, abs=1e-9)


def test_j_isometry_example():
    G = min_space(CELLS, 3.0, WeightedLr(2.0, 2))
    cs = CopiedSpace(CELLS, 3)
    coef = np.zeros((12, 2))
    coef[0] = [1.0, -1.0]
    coef[1:3] = [0.5, 2.0]
    u = SimpleAmplified.from_coef(cs, G, coef)
    assert inflation_norm(u, 1) == pytest.approx(G.norm(coef[:4]).upper, abs=1e-9)


@pytest.mark.parametrize("kind", ["min", "vector_valued"])
def test_z_family_invariance(kind):
    G = min_space(MIXED, 1.5, WeightedLr(1.0, 2)) if kind == "min" else vector_valued(MIXED, 1.5, WeightedLr(3.0, 2))
    cs = CopiedSpace(MIXED, 3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = random_simple(cs, G, rng)
        vals = [inflation_norm(u, s) for s in range(5)]
        assert max(vals) - min(vals) <= 1e-9


def test_representation_independence():
    G = vector_valued(CELLS, 2.0, WeightedLr(1.0, 2))
    cs = CopiedSpace(CELLS, 2)
    x = np.array([1.0, -3.0])
    u = SimpleAmplified(cs, G, ((MeasurableSubset(cs, [0, 5]), x),))
    same = SimpleAmplified.from_coef(cs, G, u.coef())
    assert len(same.terms) == 1
    assert inflation_norm(same, 3) == pytest.approx(inflation_norm(u, 4), abs=1e-12)


def test_transport_is_disjointly_supported():
    G = min_space(CELLS, 2.0, WeightedLr(1.0, 2))
    u = random_simple(CopiedSpace(CELLS, 2), G, np.random.default_rng(1), max_terms=3)
    v, Z = transported(u, 0)
    for i in range(len(Z)):
        for j in range(i + 1, len(Z)):
            assert Z[i].isdisjoint(Z[j])
    assert np.count_nonzero(np.any(v, axis=1)) == sum(len(z.indices) for z in Z)


def test_invalid_terms():
    G = min_space(CELLS, 2.0, WeightedLr(1.0, 2))
    cs = CopiedSpace(CELLS, 2)
    with pytest.raises(ValueError, match="overlap"):
        SimpleAmplified(cs, G, ((MeasurableSubset(cs, [0, 1]), np.ones(2)), (MeasurableSubset(cs, [1]), np.ones(2))))
    with pytest.raises(ValueError):
        SimpleAmplified(cs, G, ((MeasurableSubset(cs, [0]), np.ones(3)),))


def test_insufficient_resolution():
    X = MeasureSpace(((0, 1.0), (1, 1.0)))
    G = min_space(X, 2.0, WeightedLr(1.0, 2))
    cs = CopiedSpace(X, 3)
    u = SimpleAmplified(cs, G, tuple((MeasurableSubset(cs, [i]), np.ones(2)) for i in range(3)))
    with pytest.raises(InsufficientResolutionError):
        inflation_norm(u, 0)


def test_structure_j_q():
    G = vector_valued(CELLS, 2.0, WeightedLr(2.0, 2))
    S = InflationStructure(G, 3, seed=0)
    coef = np.random.default_rng(2).standard_normal((4, 2))
    assert np.array_equal(S.Q(S.J(coef)), coef)
    assert S.norm(S.J(coef)) == pytest.approx(G.norm(coef).upper, abs=1e-9)


def test_action_identity_and_projection():
    G = min_space(CELLS, 2.0, WeightedLr(1.0, 2))
    cs = CopiedSpace(CELLS, 2)
    u = random_simple(cs, G, np.random.default_rng(3))
    rep = inflation_action_check(np.eye(cs.dim), u, 0)
    assert rep.worst_ratio == pytest.approx(1.0, abs=1e-9)
    fam = [MeasurableSubset(cs, [0, 1, 6]), MeasurableSubset(cs, [2, 7])]
    P = span_projection(cs, fam, 2.0).matrix
    rep = inflation_action_check(P, u, 0)
    assert rep.worst_ratio <= 1 + 1e-6
    assert rep.details["transport_consistency"] <= 1e-9


def test_action_random_operators():
    G = min_space(CELLS, 1.5, WeightedLr(1.0, 2))
    cs = CopiedSpace(CELLS, 2)
    rng = np.random.default_rng(4)
    for _ in range(30):
        u = random_simple(cs, G, rng, max_terms=2)
        # at most dim X distinct output rows, so a . u is representable
        a = np.zeros((cs.dim, cs.dim))
        a[rng.choice(cs.dim, CELLS.dim, replace=False)] = rng.standard_normal((CELLS.dim, cs.dim))
        rep = inflation_action_check(a, u, 0)
        assert rep.passed
        assert rep.reevaluate() == pytest.approx(rep.worst_ratio, rel=1e-12)


@pytest.mark.parametrize("kind", ["min", "vector_valued"])
def test_verify_inflation(kind):
    G = min_space(CELLS, 2.0, WeightedLr(1.0, 2)) if kind == "min" else vector_valued(CELLS, 2.0, WeightedLr(2.0, 2))
    rep = verify_inflation(G, copies=3, trials=25, seed=1)
    assert rep.passed, rep.details
    assert rep.details["qj_identity_exact"]
    if kind == "vector_valued":
        assert rep.details["matches_bochner_over_copies"]
    assert rep.reevaluate() == pytest.approx(rep.worst_ratio, abs=1e-12)


def test_near_L_input_noted():
    G = vector_valued(MeasureSpace(((0, 1.0), (1, 1.0))), 2.0, WeightedLr(1.0, 2))
    rep = verify_inflation(G, copies=2, trials=100, seed=0)
    assert not rep.details["contractibility_precheck"]
    assert "near-L input: inflation hypotheses not met" in rep.notes


def test_resolution_trace():
    trace = resolution_trace(lambda m: min_space(MeasureSpace((), m, 1.0 / m), 2.0, WeightedLr(1.0, 2)), [2, 4], trials=10)
    assert set(trace) == {2, 4}
    assert all(t["passed"] and t["j_isometry_max_error"] <= 1e-9 for t in trace.values())


def test_action_report_records_z_family():
    G = min_space(CELLS, 2.0, WeightedLr(1.0, 2))
    u = random_simple(CopiedSpace(CELLS, 2), G, np.random.default_rng(5), max_terms=2)
    rep = inflation_action_check(np.eye(8), u, 3)
    fam = rep.details["z_family"]
    assert len(fam) == len(u.terms) and all(set(a).isdisjoint(b) for a in fam for b in fam if a is not b)
