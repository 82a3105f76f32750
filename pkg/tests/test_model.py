import numpy as np
import pytest

from sumformer.attention import build_sum_extraction
from sumformer.equivariance import check_equivariance, lift
from sumformer.errors import BudgetError, DomainError, ShapeError
from sumformer.mlp import MlpSpec, zero_mlp_params
from sumformer.model import (
    LatentPolynomial,
    MlpCombiner,
    PolynomialFeatureMap,
    SumformerModel,
    build_continuous_sumformer,
    build_discrete_sumformer,
    build_mlp_sumformer,
    build_polynomial_sumformer,
    discrete_forward,
    sumformer_forward,
    sup_error,
)
from sumformer.multisym import enumerate_multidegrees


def _coeff(*values):
    return np.array(values, dtype=np.float64)


def test_zero_psi_gives_zero_output():
    basis = enumerate_multidegrees(1, 2)
    spec = MlpSpec((3, 1))
    model = SumformerModel(
        d=1, d_latent=2,
        phi=PolynomialFeatureMap(basis),
        psi=MlpCombiner(spec, zero_mlp_params(spec)),
    )
    x = np.random.default_rng(0).uniform(size=(4, 1))
    assert np.array_equal(sumformer_forward(model, x), np.zeros((4, 1)))


def test_projection_psi_gives_identity():
    basis = enumerate_multidegrees(2, 2)
    spec = MlpSpec((2 + basis.size, 2))
    params = zero_mlp_params(spec)
    params[0][0][:2, :] = np.eye(2)  # psi(x, sigma) = x
    model = SumformerModel(
        d=2, d_latent=basis.size, phi=PolynomialFeatureMap(basis),
        psi=MlpCombiner(spec, params),
    )
    x = np.random.default_rng(1).uniform(size=(5, 2))
    assert np.allclose(sumformer_forward(model, x), x, atol=1e-15)


def test_hand_built_pairwise_target():
    # psi(x, sigma) = sigma_0(s) + x * sigma_1(s) with s the other-token
    # power sums realizes q(x1, {x2, x3}) = x1 + x2 * x3
    basis = enumerate_multidegrees(1, 3)
    sigma0 = LatentPolynomial((
        (_coeff(0.5), (2, 0, 0)),   # s1^2 / 2
        (_coeff(-0.5), (0, 1, 0)),  # -s2 / 2
    ))
    sigma1 = LatentPolynomial(((_coeff(1.0), (0, 0, 0)),))
    model = build_continuous_sumformer(3, 1, [((0,), sigma0), ((1,), sigma1)])
    out = sumformer_forward(model, np.array([[1.0], [2.0], [3.0]]))
    assert np.allclose(out, [[7.0], [5.0], [5.0]], atol=1e-12)


def test_empty_term_list_is_zero_function():
    model = build_continuous_sumformer(2, 1, [])
    x = np.random.default_rng(2).uniform(size=(2, 1))
    assert np.array_equal(sumformer_forward(model, x), np.zeros((2, 1)))


def test_constant_term_reproduces_other_token_sum():
    # psi = sigma_0(s) = s_1 realizes f_i = p1(X) - x_i
    sigma0 = LatentPolynomial(((_coeff(1.0), (1, 0)),))
    model = build_continuous_sumformer(2, 1, [((0,), sigma0)])
    out = sumformer_forward(model, np.array([[1.0], [4.0]]))
    assert np.allclose(out, [[4.0], [1.0]], atol=1e-12)


def test_continuous_model_matches_pairwise_oracle():
    # e2(X) as a lift: row i = (s1^2 - s2)/2 + x_i * s1 over the other tokens
    basis = enumerate_multidegrees(1, 3)
    sigma0 = LatentPolynomial(((_coeff(0.5), (2, 0, 0)), (_coeff(-0.5), (0, 1, 0))))
    sigma1 = LatentPolynomial(((_coeff(1.0), (1, 0, 0)),))
    model = build_continuous_sumformer(3, 1, [((0,), sigma0), ((1,), sigma1)])

    def brute_e2(x):
        n = x.shape[0]
        return sum(x[i, 0] * x[j, 0] for i in range(n) for j in range(i + 1, n))

    rng = np.random.default_rng(3)
    for _ in range(25):
        x = rng.uniform(size=(3, 1))
        out = sumformer_forward(model, x)
        assert np.max(np.abs(out - brute_e2(x))) <= 1e-9


def test_continuous_model_equals_sum_extraction_bridge():
    # the fixed-weight attention network followed by the same psi agrees
    # with the direct forward
    basis = enumerate_multidegrees(1, 3)
    sigma0 = LatentPolynomial(((_coeff(0.5), (2, 0, 0)), (_coeff(-0.5), (0, 1, 0))))
    sigma1 = LatentPolynomial(((_coeff(1.0), (0, 0, 0)),))
    model = build_continuous_sumformer(3, 1, [((0,), sigma0), ((1,), sigma1)])
    con = build_sum_extraction("standard", 3, 1, basis)
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = rng.uniform(size=(3, 1))
        z = con.forward(x)
        x_cols = z[:, 1:2]
        phi_cols = z[:, 2:2 + basis.size]
        sigma = z[0, -basis.size:]
        via_network = model.psi.apply(x_cols, phi_cols, sigma)
        assert np.max(np.abs(via_network - sumformer_forward(model, x))) <= 1e-8


def test_all_model_kinds_are_equivariant():
    n, d = 4, 2
    models = [
        build_mlp_sumformer(d, 6, seed=0),
        build_polynomial_sumformer(n, d, seed=1),
    ]
    for model in models:
        report = check_equivariance(
            lambda x: sumformer_forward(model, x), n, d, trials=25, seed=5
        )
        assert report.max_violation <= 1e-10


def test_mlp_phi_sigma_matches_manual_sum():
    model = build_mlp_sumformer(2, 4, seed=2)
    x = np.random.default_rng(6).uniform(size=(3, 2))
    phi_rows = model.phi.rows(x)
    out = sumformer_forward(model, x)
    stacked = np.hstack([x, np.tile(phi_rows.sum(axis=0), (3, 1))])
    from sumformer.mlp import mlp_forward

    expected = mlp_forward(model.psi.spec, model.psi.params, stacked)
    assert np.max(np.abs(out - expected)) <= 1e-12


# ---------------------------------------------------------------------------
# Discrete (grid) realization
# ---------------------------------------------------------------------------

def test_discrete_two_cells_first_token():
    ds = build_discrete_sumformer(lambda x, rest: x, delta_cells=2, n=2, d=1)
    out = discrete_forward(ds, np.array([[0.6], [0.1]]))
    assert np.array_equal(out, [[0.5], [0.0]])


def test_discrete_constant_target_any_resolution():
    for delta in (1, 2, 5):
        ds = build_discrete_sumformer(
            lambda x, rest: np.full_like(x, 0.25), delta_cells=delta, n=3, d=1
        )
        x = np.random.default_rng(delta).uniform(size=(3, 1))
        assert np.array_equal(discrete_forward(ds, x), np.full((3, 1), 0.25))


def test_discrete_exact_at_anchors():
    def g(x, rest):
        return x + rest.sum(axis=0) ** 2

    delta = 4
    ds = build_discrete_sumformer(g, delta_cells=delta, n=2, d=1)
    f = lift(g)
    rng = np.random.default_rng(7)
    for _ in range(20):
        anchors = rng.integers(0, delta, size=(2, 1)) / delta
        assert np.array_equal(discrete_forward(ds, anchors), f(anchors))


def test_discrete_piecewise_constant_within_cells():
    def g(x, rest):
        return x * 2.0 + rest.sum(axis=0)

    delta = 4
    ds = build_discrete_sumformer(g, delta_cells=delta, n=2, d=1)
    rng = np.random.default_rng(8)
    for _ in range(20):
        x = rng.uniform(size=(2, 1))
        cells = np.floor(x * delta)
        same_cell = (cells + rng.uniform(0, 1, size=x.shape)) / delta
        assert np.array_equal(discrete_forward(ds, x), discrete_forward(ds, same_cell))


def test_discrete_permutation_exact():
    def g(x, rest):
        return x + rest.sum(axis=0) ** 2

    ds = build_discrete_sumformer(g, delta_cells=3, n=3, d=1)
    rng = np.random.default_rng(9)
    for _ in range(20):
        x = rng.uniform(size=(3, 1))
        perm = rng.permutation(3)
        assert np.array_equal(discrete_forward(ds, x[perm]), discrete_forward(ds, x)[perm])


def test_discrete_lipschitz_bound():
    # g(x1, {x2}) = x1 + x2^2 has Euclidean gradient norm at most sqrt(5)
    def g(x, rest):
        return x + rest.sum(axis=0) ** 2

    lipschitz = np.sqrt(5.0)
    n, d = 2, 1
    errors = {}
    for delta in (4, 8):
        ds = build_discrete_sumformer(g, delta_cells=delta, n=n, d=d)
        err = sup_error(lambda x: discrete_forward(ds, x), g, n, d, sample_count=1000, seed=10)
        assert err <= lipschitz * (1.0 / delta) * np.sqrt(n * d)
        errors[delta] = err
    assert 0.3 <= errors[8] / errors[4] <= 0.8


def test_discrete_domain_error():
    ds = build_discrete_sumformer(lambda x, rest: x, delta_cells=2, n=2, d=1)
    with pytest.raises(DomainError):
        discrete_forward(ds, np.array([[1.0], [0.5]]))


def test_discrete_budget_guard():
    with pytest.raises(BudgetError):
        build_discrete_sumformer(lambda x, rest: x, delta_cells=10, n=7, d=1)


def test_discrete_multidimensional_tokens():
    def g(x, rest):
        return x + rest.sum(axis=0)

    ds = build_discrete_sumformer(g, delta_cells=2, n=2, d=2)
    f = lift(g)
    anchors = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert np.array_equal(discrete_forward(ds, anchors), f(anchors))


def test_sup_error_examples():
    def g(x, rest):
        return x + rest.sum(axis=0)

    f = lift(g)
    assert sup_error(f, g, 3, 1, sample_count=50, seed=11) == 0.0
    shifted = lambda x: f(x) + 0.75
    assert sup_error(shifted, g, 3, 1, sample_count=50, seed=12) == pytest.approx(0.75)


def test_model_width_validation():
    basis = enumerate_multidegrees(1, 2)
    spec = MlpSpec((5, 1))  # wrong: needs d + d_latent = 3
    with pytest.raises(ShapeError):
        SumformerModel(d=1, d_latent=2, phi=PolynomialFeatureMap(basis),
                       psi=MlpCombiner(spec, zero_mlp_params(spec)))


def test_continuous_builder_validates_arity():
    bad_sigma = LatentPolynomial(((_coeff(1.0), (1,)),))  # arity 1, basis needs 2
    with pytest.raises(ShapeError):
        build_continuous_sumformer(2, 1, [((0,), bad_sigma)])
