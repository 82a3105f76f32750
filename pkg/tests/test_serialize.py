import numpy as np
import pytest

from sumformer.attention import (
    LinformerHeadSpec,
    PerformerHeadSpec,
    StandardHeadSpec,
    build_sum_extraction,
)
from sumformer.errors import ConfigError
from sumformer.model import (
    LatentPolynomial,
    build_continuous_sumformer,
    build_discrete_sumformer,
    build_mlp_sumformer,
    build_polynomial_sumformer,
    sumformer_forward,
)
from sumformer.multisym import enumerate_multidegrees
from sumformer.serialize import (
    dump_construction,
    dump_head,
    dump_model,
    export_discrete_table,
    load_construction,
    load_head,
    load_model,
)


def _rng_mats(m, rng, count=3):
    return [rng.uniform(-1, 1, size=(m, m)) for _ in range(count)]


def test_standard_head_round_trip_bitwise():
    rng = np.random.default_rng(0)
    spec = StandardHeadSpec(*_rng_mats(4, rng))
    loaded = load_head(dump_head(spec))
    assert isinstance(loaded, StandardHeadSpec)
    for name in ("w_q", "w_k", "w_v"):
        assert np.array_equal(getattr(loaded, name), getattr(spec, name))


def test_linformer_head_round_trip():
    rng = np.random.default_rng(1)
    spec = LinformerHeadSpec(*_rng_mats(3, rng), e=rng.uniform(size=(2, 5)), f=rng.uniform(size=(2, 5)))
    loaded = load_head(dump_head(spec))
    assert np.array_equal(loaded.e, spec.e)
    assert np.array_equal(loaded.f, spec.f)


def test_performer_head_round_trip():
    rng = np.random.default_rng(2)
    spec = PerformerHeadSpec(*_rng_mats(3, rng), omegas=rng.standard_normal((4, 3)))
    loaded = load_head(dump_head(spec))
    assert np.array_equal(loaded.omegas, spec.omegas)


@pytest.mark.parametrize("variant,kwargs", [
    ("standard", {}),
    ("linformer", {"k": 2}),
    ("performer", {"k": 2, "seed": 9}),
])
def test_construction_round_trip_same_forward(variant, kwargs):
    basis = enumerate_multidegrees(2, 2)
    con = build_sum_extraction(variant, 4, 2, basis, **kwargs)
    loaded = load_construction(dump_construction(con))
    x = np.random.default_rng(3).uniform(size=(4, 2))
    assert np.array_equal(loaded.forward(x), con.forward(x))
    assert loaded.variant == variant
    assert loaded.wv_scale == con.wv_scale
    assert loaded.lambda_value == con.lambda_value


def test_construction_with_mlp_phi_round_trip():
    from sumformer.mlp import MlpSpec, init_mlp_params

    basis = enumerate_multidegrees(1, 2)
    rng = np.random.default_rng(4)
    spec = MlpSpec((1, 5, basis.size))
    con = build_sum_extraction("standard", 3, 1, basis, phi_net=(spec, init_mlp_params(spec, rng)))
    loaded = load_construction(dump_construction(con))
    x = rng.uniform(size=(3, 1))
    assert np.array_equal(loaded.forward(x), con.forward(x))


def test_mlp_model_round_trip_same_forward():
    model = build_mlp_sumformer(2, 5, seed=5)
    loaded = load_model(dump_model(model))
    x = np.random.default_rng(6).uniform(size=(3, 2))
    assert np.array_equal(sumformer_forward(loaded, x), sumformer_forward(model, x))


def test_polynomial_phi_model_round_trip():
    model = build_polynomial_sumformer(3, 2, seed=7)
    loaded = load_model(dump_model(model))
    x = np.random.default_rng(8).uniform(size=(3, 2))
    assert np.array_equal(sumformer_forward(loaded, x), sumformer_forward(model, x))


def test_continuous_model_round_trip():
    sigma0 = LatentPolynomial((
        (np.array([0.5]), (2, 0, 0)),
        (np.array([-0.5]), (0, 1, 0)),
    ))
    sigma1 = LatentPolynomial(((np.array([1.0]), (0, 0, 0)),))
    model = build_continuous_sumformer(3, 1, [((0,), sigma0), ((1,), sigma1)])
    loaded = load_model(dump_model(model))
    x = np.array([[1.0], [2.0], [3.0]])
    assert np.array_equal(sumformer_forward(loaded, x), sumformer_forward(model, x))


def test_export_discrete_table_lists_all_entries():
    ds = build_discrete_sumformer(lambda x, rest: x, delta_cells=2, n=2, d=1)
    text = export_discrete_table(ds)
    assert "object discrete_table" in text
    assert text.count("entry ") == len(ds.table) == 4


def test_load_rejects_bad_header():
    with pytest.raises(ConfigError):
        load_head("not a header\nobject attention_head\nend\n")


def test_load_rejects_wrong_kind():
    model = build_mlp_sumformer(1, 2, seed=0)
    with pytest.raises(ConfigError):
        load_head(dump_model(model))
