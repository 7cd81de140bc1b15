import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from pconvex.banach import PolytopeGauge, PolytopeNorm, WeightedLr, ball_sup, norm_from_dict, underlying_operator_norm

vec3 = hnp.arrays(float, 3, elements=st.floats(-5, 5, allow_nan=False).map(lambda v: 0.0 if abs(v) < 1e-50 else v))
lr_norms = st.sampled_from(
    [
        WeightedLr(1.0, 3, (1.0, 2.0, 0.5)),
        WeightedLr(2.0, 3),
        WeightedLr(3.0, 3, (0.3, 1.0, 4.0)),
        WeightedLr(np.inf, 3, (1.0, 0.5, 2.0)),
        WeightedLr(1.5, 3),
    ]
)


@given(lr_norms, vec3, vec3)
def test_duality_inequality_and_norming(norm, x, g):
    dual = norm.dual()
    assert abs(g @ x) <= dual(g) * norm(x) * (1 + 1e-12) + 1e-12
    if norm(x) > 0:
        h = norm.norming(x)
        assert dual(h) == pytest.approx(1.0, rel=1e-9)
        assert h @ x == pytest.approx(norm(x), rel=1e-9)


@given(lr_norms)
def test_dual_of_dual(norm):
    dd = norm.dual().dual()
    x = np.array([0.3, -1.2, 2.0])
    assert dd(x) == pytest.approx(norm(x), rel=1e-12)


def test_polytope_pair_closed_forms():
    # functionals +-e_i give the sup norm; the dual gauge of conv(+-e_i) is l1
    P = PolytopeNorm(((1.0, 0.0), (0.0, 1.0)))
    x = np.array([0.7, -2.0])
    assert P(x) == pytest.approx(2.0)
    assert P.dual()(x) == pytest.approx(2.7)
    g = P.dual().norming(x)
    assert P(g) <= 1 + 1e-9 and g @ x == pytest.approx(2.7)


def test_polytope_gauge_hexagon():
    pts = ((1.0, 0.0), (0.5, np.sqrt(3) / 2), (-0.5, np.sqrt(3) / 2))
    G = PolytopeGauge(pts)
    for p in pts:
        assert G(np.array(p)) == pytest.approx(1.0)
    assert G(np.array([0.75, np.sqrt(3) / 4])) == pytest.approx(1.0)


def test_polytope_requires_spanning():
    with pytest.raises(ValueError):
        PolytopeNorm(((1.0, 1.0), (2.0, 2.0)))


def test_norm_from_dict_round_trip():
    for n in [WeightedLr(np.inf, 2, (1.0, 3.0)), WeightedLr(1.5, 2), PolytopeNorm(((1.0, 0.0), (1.0, 1.0)))]:
        m = norm_from_dict(n.to_dict())
        x = np.array([0.4, -1.1])
        assert m(x) == pytest.approx(n(x))


@pytest.mark.parametrize("seed", range(5))
def test_ball_sup_vertex_exact(seed):
    c = np.random.default_rng(seed).standard_normal(4)
    w = np.array([1.0, 2.0, 0.5, 1.0])
    est = ball_sup(lambda X: np.abs(X @ c), WeightedLr(1.0, 4, tuple(w)))
    assert est.is_exact
    assert est.upper == pytest.approx(np.max(np.abs(c) / w))


@pytest.mark.parametrize("seed", range(5))
def test_ball_sup_euclidean_2d(seed):
    M = np.random.default_rng(seed).standard_normal((3, 2))
    est = ball_sup(lambda X: np.linalg.norm(X @ M.T, axis=1), WeightedLr(2.0, 2))
    truth = np.linalg.norm(M, 2)
    assert est.contains(truth, 1e-12)
    assert est.width <= 1e-6 * truth


@pytest.mark.parametrize("seed", range(3))
def test_ball_sup_euclidean_3d(seed):
    M = np.random.default_rng(seed).standard_normal((3, 3))
    est = ball_sup(lambda X: np.linalg.norm(X @ M.T, axis=1), WeightedLr(2.0, 3))
    truth = np.linalg.norm(M, 2)
    assert est.contains(truth, 1e-12)
    assert est.width <= 5e-3 * truth


def test_ball_sup_high_dim_outer_polytope():
    M = np.random.default_rng(1).standard_normal((2, 5))
    est = ball_sup(lambda X: np.linalg.norm(X @ M.T, axis=1), WeightedLr(2.0, 5))
    assert est.contains(np.linalg.norm(M, 2), 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_underlying_operator_norm_l1_to_linf(seed):
    phi = np.random.default_rng(seed).standard_normal((2, 3))
    est = underlying_operator_norm(phi, WeightedLr(1.0, 3), WeightedLr(np.inf, 2))
    assert est.is_exact
    assert est.upper == pytest.approx(np.abs(phi).max())


def test_underlying_operator_norm_l2():
    phi = np.array([[1.0, 2.0], [0.0, -1.0]])
    est = underlying_operator_norm(phi, WeightedLr(2.0, 2), WeightedLr(2.0, 2))
    assert est.contains(np.linalg.norm(phi, 2), 1e-12)
    assert est.width < 1e-6
