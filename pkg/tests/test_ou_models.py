import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyou.levy_core import (AtomicMeasure, CompoundPoissonMeasure, LevyTriplet, LogTailMeasure,
                              StableMeasure, TemperedStableMeasure, char_exponent)
from levyou.ou_models import (LogMomentViolation, OUModel, check_log_moment,
                              exponent_time_integral, gamma_correction, invariant_cf,
                              invariant_triplet, transition_cf, transition_triplet)


def gaussian_model(c=1.0, q=1.0, g=0.0):
    return OUModel(c, LevyTriplet.gaussian([[q]], [g]))


def unit_stable_model(alpha, c=1.0):
    return OUModel(c, LevyTriplet.pure_jump(StableMeasure.unit(alpha)))


# -- model validation ------------------------------------------------------------

def test_model_validation():
    with pytest.raises(ValueError):
        gaussian_model(c=-1.0)
    with pytest.raises(ValueError):
        OUModel(np.array([[1.0, 0.0], [0.0, -0.5]]), LevyTriplet.gaussian(np.eye(2)))
    with pytest.raises(ValueError):
        OUModel(np.eye(3), LevyTriplet.gaussian(np.eye(2)))


def test_model_round_trip():
    m = OUModel(np.array([[1.0, 0.5], [0.0, 2.0]]),
                LevyTriplet(2, np.eye(2), AtomicMeasure([[1.0, 1.0]], [0.5]), [0.1, 0.0]))
    doc = m.to_dict()
    assert doc["drift"] == {"matrix": [[1.0, 0.5], [0.0, 2.0]]}
    back = OUModel.from_dict(doc)
    assert back.to_dict() == doc
    assert OUModel.from_dict(gaussian_model(2.0).to_dict()).c == 2.0


# -- transition laws ---------------------------------------------------------------

def test_transition_at_time_zero():
    m = unit_stable_model(1.5)
    assert abs(transition_cf(m, 0.0, 0.7, 1.3) - np.exp(1j * 0.7 * 1.3)) < 1e-15


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_gaussian_transition_cf(t):
    m = gaussian_model()
    for z in (0.5, 1.0, 3.0):
        expect = math.exp(-z * z * (1 - math.exp(-2 * t)) / 4)
        assert abs(transition_cf(m, t, 0.0, z) - expect) < 1e-12


@pytest.mark.parametrize("alpha", [0.8, 1.5])
def test_stable_transition_cf(alpha):
    m = unit_stable_model(alpha)
    for t in (0.5, 2.0):
        for z in (0.5, 2.0):
            expect = math.exp(-abs(z) ** alpha * (1 - math.exp(-alpha * t)) / alpha)
            assert abs(transition_cf(m, t, 0.0, z) - expect) < 1e-10


def test_gaussian_transition_triplet_closed_form():
    c, q, g, x, t = 0.7, 2.0, 0.3, 1.5, 1.2
    law = transition_triplet(gaussian_model(c, q, g), t, x)
    assert law.Q_t[0, 0] == pytest.approx(q * (1 - math.exp(-2 * c * t)) / (2 * c), rel=1e-14)
    assert law.gamma_tx[0] == pytest.approx(math.exp(-c * t) * x + g * (1 - math.exp(-c * t)) / c)
    assert law.nu_t.total_mass() == 0


def test_transition_triplet_at_zero():
    law = transition_triplet(unit_stable_model(1.2), 0.0, 0.4)
    assert np.all(law.Q_t == 0)
    assert law.gamma_tx[0] == pytest.approx(0.4)
    assert law.nu_t.total_mass() == 0


def test_atom_pushforward_mass_and_correction():
    m = OUModel(1.0, LevyTriplet.pure_jump(AtomicMeasure([[2.0]], [1.0])))
    t = math.log(2)
    law = transition_triplet(m, t, 0.0)
    assert law.nu_t.total_mass() == pytest.approx(math.log(2), rel=1e-14)
    assert gamma_correction(m, t)[0] == pytest.approx(0.0, abs=1e-14)
    # past t = log 2 the image enters the unit ball
    assert gamma_correction(m, 2.0)[0] > 0


@pytest.mark.parametrize("noise", [
    LevyTriplet(1, [[0.5]], AtomicMeasure([[2.0], [-0.5]], [1.0, 0.4]), [0.2]),
    LevyTriplet.pure_jump(CompoundPoissonMeasure(1.5, 0.7, 0.9)),
    LevyTriplet.pure_jump(StableMeasure(1.3, 0.8)),
    LevyTriplet(1, [[0.0]], AtomicMeasure([[3.0]], [0.7]), [0.0], "rational"),
], ids=["atoms", "compound-poisson", "stable", "rational-atom"])
def test_triplet_route_matches_exponent_route(noise):
    m = OUModel(0.8, noise)
    for t in (0.4, 2.5):
        law = transition_triplet(m, t, 0.6)
        for z in (-2.0, 0.5, 1.7):
            assert abs(law.cf(z) - transition_cf(m, t, 0.6, z)) < 1e-6


def test_matrix_triplet_route():
    A = np.array([[1.0, 0.4], [-0.3, 1.5]])
    noise = LevyTriplet(2, [[1.0, 0.2], [0.2, 0.5]], AtomicMeasure([[1.5, 0.2], [-0.3, 0.8]], [0.6, 1.0]),
                        [0.1, -0.2])
    m = OUModel(A, noise)
    for t in (0.5, 2.0):
        law = transition_triplet(m, t, [0.3, -0.4])
        for z in ([1.0, 0.0], [-0.5, 2.0]):
            assert abs(law.cf(z) - transition_cf(m, t, [0.3, -0.4], z)) < 1e-6
    inv = invariant_triplet(m)
    for z in ([1.0, 0.0], [0.7, -1.1]):
        assert abs(inv.cf(z) - invariant_cf(m, z)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.05, 3), s=st.floats(0.05, 3), z=st.floats(-3, 3), x=st.floats(-2, 2))
def test_chapman_kolmogorov_split(t, s, z, x):
    m = OUModel(0.9, LevyTriplet(1, [[0.4]], StableMeasure(1.4, 0.5), [0.1]))
    whole = exponent_time_integral(m, z, 0.0, t + s)
    parts = exponent_time_integral(m, z, 0.0, t) + exponent_time_integral(m, z, t, t + s)
    assert abs(whole - parts) < 1e-8
    # transition over t+s from x: start point moves deterministically, noise integrates
    lhs = transition_cf(m, t + s, x, z)
    rhs = np.exp(1j * math.exp(-0.9 * (t + s)) * x * z + parts)
    assert abs(lhs - rhs) < 1e-8


# -- invariant laws -----------------------------------------------------------------

def test_gaussian_invariant_cf():
    assert abs(invariant_cf(gaussian_model(1.0, 2.0), 1.0) - math.exp(-0.5)) < 1e-12


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.9])
def test_stable_invariant_cf(alpha):
    # exponent -a2 c_alpha |z|^alpha with a2 = 1 gives exp(-c_alpha |z|^alpha / alpha)
    from levyou.levy_core import stable_constant
    m = OUModel(1.0, LevyTriplet.pure_jump(StableMeasure(alpha, 1.0)))
    for z in (0.3, 1.0, 2.5):
        expect = math.exp(-stable_constant(alpha) * abs(z) ** alpha / alpha)
        assert abs(invariant_cf(m, z) - expect) < 1e-10


def test_drift_only_noise():
    m = OUModel(2.0, LevyTriplet.gaussian([[0.0]], [3.0]))
    for z in (0.5, 1.5):
        assert abs(invariant_cf(m, z) - np.exp(1j * 1.5 * z)) < 1e-12


def test_invariant_triplet_gaussian():
    law = invariant_triplet(gaussian_model(2.0, 3.0, 1.0))
    assert law.Q_inf[0, 0] == pytest.approx(0.75)
    assert law.gamma_inf[0] == pytest.approx(0.5)
    assert law.cf_evaluator(0.0) == 1


def test_invariant_triplet_matrix_diag():
    m = OUModel(np.diag([1.0, 2.0]), LevyTriplet.gaussian(np.eye(2)))
    np.testing.assert_allclose(invariant_triplet(m).Q_inf, np.diag([0.5, 0.25]), atol=1e-10)


def test_invariant_triplet_atom_drift():
    m = OUModel(1.0, LevyTriplet.pure_jump(AtomicMeasure([[3.0]], [1.0])))
    law = invariant_triplet(m)
    assert law.gamma_inf[0] == pytest.approx(1.0, abs=1e-12)
    for z in (0.4, 1.0, 2.2):
        assert abs(law.cf(z) - invariant_cf(m, z)) < 1e-6


@pytest.mark.parametrize("nu", [StableMeasure(1.2), TemperedStableMeasure(1.5, 1.0, 0.5),
                                CompoundPoissonMeasure(2.0, 0.5, 1.0)], ids=lambda n: n.kind)
def test_invariant_triplet_route(nu):
    m = OUModel(1.3, LevyTriplet(1, [[0.3]], nu, [0.2]))
    law = invariant_triplet(m)
    for z in (-1.5, 0.5, 2.0):
        assert abs(law.cf(z) - invariant_cf(m, z)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.05, 4), z=st.floats(-3, 3))
def test_stationarity_fixed_point(t, z):
    c = 0.8
    m = OUModel(c, LevyTriplet(1, [[0.5]], StableMeasure(1.6, 0.4), [0.0]))
    lhs = invariant_cf(m, z)
    rhs = invariant_cf(m, math.exp(-c * t) * z) * np.exp(exponent_time_integral(m, z, 0.0, t))
    assert abs(lhs - rhs) < 1e-8


def test_matrix_stationarity_fixed_point():
    A = np.array([[1.0, 0.5], [0.0, 2.0]])
    m = OUModel(A, LevyTriplet(2, np.eye(2), StableMeasure(1.5, 0.5, 2), [0.0, 0.0]))
    from scipy.linalg import expm
    z = np.array([0.8, -1.1])
    t = 0.7
    lhs = invariant_cf(m, z)
    rhs = invariant_cf(m, expm(-t * A.T) @ z) * np.exp(exponent_time_integral(m, z, 0.0, t))
    assert abs(lhs - rhs) < 1e-8


def test_transition_converges_monotonically():
    m = unit_stable_model(1.3)
    for z in (0.5, 1.0, 2.0):
        gaps = [abs(transition_cf(m, t, 0.0, z) - invariant_cf(m, z)) for t in (0.5, 1, 2, 4, 8)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_q_t_loewner_monotone():
    A = np.array([[1.0, 0.3], [0.0, 1.5]])
    m = OUModel(A, LevyTriplet.gaussian([[1.0, 0.3], [0.3, 2.0]]))
    prev = np.zeros((2, 2))
    for t in (0.2, 0.5, 1.0, 3.0):
        Qt = transition_triplet(m, t, [0, 0]).Q_t
        assert np.linalg.eigvalsh(Qt - prev).min() > -1e-12
        prev = Qt
    assert np.linalg.eigvalsh(invariant_triplet(m).Q_inf - prev).min() > -1e-12


# -- log-moment gate --------------------------------------------------------------------

def test_log_moment_violation():
    m = OUModel(1.0, LevyTriplet.pure_jump(LogTailMeasure(1.0, 2.0)))
    assert check_log_moment(m).verdict == "infinite"
    with pytest.raises(LogMomentViolation):
        invariant_cf(m, 1.0)
    with pytest.raises(LogMomentViolation):
        invariant_triplet(m)
    # the transition law exists regardless
    assert abs(transition_cf(m, 1.0, 0.0, 1.0)) <= 1


def test_check_log_moment_delegates():
    rep = check_log_moment(OUModel(1.0, LevyTriplet.pure_jump(StableMeasure(1.0, 1.0))))
    assert rep.finite and rep.value == pytest.approx(math.log(2) + 1)
    rep = check_log_moment(OUModel(1.0, LevyTriplet.pure_jump(AtomicMeasure([[10.0]], [3.0]))))
    assert rep.value == pytest.approx(3 * math.log(10))


@settings(max_examples=15, deadline=None)
@given(c=st.floats(0.2, 3), q=st.floats(0, 2), z=st.floats(-4, 4))
def test_invariant_cf_is_contraction(c, q, z):
    m = OUModel(c, LevyTriplet(1, [[q]], StableMeasure(1.1, 0.3), [0.5]))
    v = invariant_cf(m, z)
    assert abs(v) <= 1 + 1e-12
    assert abs(invariant_cf(m, -z) - np.conj(v)) < 1e-10


def test_noise_exponent_used_with_adjoint():
    # with non-normal A the exponent is evaluated at e^{-sA^T} z
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    tri = LevyTriplet.gaussian(np.diag([1.0, 0.0]))
    m = OUModel(A, tri)
    z = np.array([0.0, 1.0])
    from scipy import integrate
    from scipy.linalg import expm
    expo = integrate.quad(lambda s: char_exponent(tri, expm(-s * A.T) @ z).real, 0, 40)[0]
    assert abs(invariant_cf(m, z) - math.exp(expo)) < 1e-9
