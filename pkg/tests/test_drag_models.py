import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from porodarcy.drag_models import DragModel, Scaling, alpha, alpha_inverse
from porodarcy.errors import NonpositiveDragError


def test_law_values():
    assert DragModel("constant", 2.0, 0.5).alpha(0, 3.0) == 2.0
    assert DragModel("linear", 2.0, 0.5).alpha(0, 3.0) == pytest.approx(5.0)
    assert DragModel("barus", 2.0, 0.5).alpha(0, 3.0) == pytest.approx(2 * math.exp(1.5))


def test_module_level_helpers():
    m = DragModel("barus", 1.0, 0.1)
    assert alpha(m, 0, 2.0) * alpha_inverse(m, 0, 2.0) == pytest.approx(1.0)


def test_linear_law_breakdown():
    m = DragModel("linear", 1.0, 0.5)
    with pytest.raises(NonpositiveDragError):
        m.alpha(0, np.array([0.0, -2.0]))
    with pytest.raises(NonpositiveDragError):
        m.alpha(0, -3.0)


def test_region_lookup():
    m = DragModel("barus", {1: 1.0, 2: 0.001}, 0.0)
    np.testing.assert_array_equal(m.region_alpha0(np.array([1, 2, 1])), [1.0, 0.001, 1.0])
    with pytest.raises(KeyError):
        m.region_alpha0(3)
    single = DragModel("barus", {7: 3.0})
    assert single.region_alpha0(0) == 3.0


@pytest.mark.parametrize("kwargs", [
    dict(law="cubic"), dict(alpha0=0.0), dict(alpha0={1: -1.0}), dict(beta=-0.1),
    dict(A=0.0), dict(alpha0={}),
])
def test_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        DragModel(**kwargs)


def test_pressure_independence():
    assert DragModel("barus", 1.0, 0.0).pressure_independent
    assert DragModel("constant", 1.0, 0.3).pressure_independent
    assert not DragModel("linear", 1.0, 0.3).pressure_independent
    assert not DragModel("barus", 1.0, 0.3).with_beta(0.0).beta


@given(st.floats(1e-3, 1e3), st.floats(0, 2), st.floats(-50, 50))
def test_barus_positive_and_monotone(a0, beta, p):
    m = DragModel("barus", a0, beta)
    lo, hi = m.alpha(0, p), m.alpha(0, p + 1.0)
    assert lo > 0 and hi >= lo
    assert m.alpha(0, p) * m.alpha_inverse(0, p) == pytest.approx(1.0)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 2), st.floats(0, 50))
def test_linear_reduces_to_alpha0_at_zero_pressure(a0, beta, p):
    m = DragModel("linear", a0, beta)
    assert m.alpha(0, 0.0) == pytest.approx(a0)
    assert m.alpha(0, p) >= a0


def test_scaling_groups():
    s = Scaling(length=100.0, velocity=1e-3, pressure=1e6, alpha_ref=1e9, rho_ref=1000.0,
                body_force=9.81)
    assert s.A == pytest.approx(1e9 * 1e-3 * 100 / 1e6)
    assert s.C == pytest.approx(1000 * 100 * 9.81 / 1e6)


def test_scaling_round_trip():
    s = Scaling(length=2.0, velocity=3.0, pressure=5.0, alpha_ref=7.0)
    nd = s.to_dimensionless(x=4.0, v=6.0, p=10.0, beta=0.02)
    assert nd["x"] == 2.0 and nd["v"] == 2.0 and nd["p"] == 2.0
    assert nd["beta"] == pytest.approx(0.1)
    back = s.to_dimensional(x=nd["x"], v=nd["v"], p=nd["p"], beta=nd["beta"])
    assert back["x"] == 4.0 and back["p"] == 10.0 and back["beta"] == pytest.approx(0.02)


def test_scaling_drag_model_is_invariant():
    # dimensional drag at dimensional pressure equals alpha_ref times the
    # non-dimensional drag at the scaled pressure
    s = Scaling(pressure=1e5, alpha_ref=1e8)
    model = s.drag_model("barus", {1: 3e8}, 2e-5)
    p = 4e5
    assert model.alpha(1, p / s.pressure) * s.alpha_ref == pytest.approx(3e8 * math.exp(2e-5 * p))


def test_scaling_rejects_nonpositive():
    with pytest.raises(ValueError):
        Scaling(length=0.0)
