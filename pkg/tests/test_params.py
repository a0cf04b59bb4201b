import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorenz_spec.errors import InvalidParams
from lorenz_spec.params import DEFAULT_PARAMS, GeometricLorenzParams, dump_params, load_params, parse_key_values


def test_defaults_derived_quantities():
    p = DEFAULT_PARAMS
    assert p.a == pytest.approx(0.8)
    assert p.k * p.a == pytest.approx(1.52)
    assert p.k * p.a > math.sqrt(2)


@pytest.mark.parametrize(
    "kw",
    [dict(k=2.1), dict(k=1.7), dict(lambda3=1.2), dict(b=1.2), dict(c=0.9), dict(tau_tube=0.0), dict(lambda2=0.5)],
)
def test_invalid_params_rejected(kw):
    with pytest.raises(InvalidParams):
        GeometricLorenzParams(**kw)


def test_roundtrip_key_value(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text(dump_params(DEFAULT_PARAMS) + "# comment\n\n")
    assert load_params(path) == DEFAULT_PARAMS


def test_inconsistent_a_rejected(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("a = 0.5\n")
    with pytest.raises(InvalidParams):
        load_params(path)


def test_parse_rejects_garbage():
    with pytest.raises(InvalidParams):
        parse_key_values("no equals sign here")


@given(st.floats(1.78, 1.99), st.floats(0.05, 0.4))
def test_valid_region_accepted(k, b):
    p = GeometricLorenzParams(k=k, b=b)
    assert p.k * p.a > math.sqrt(2)
