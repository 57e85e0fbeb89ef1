import numpy as np
import pytest
import scipy.optimize

from nvthermal import fitting, thermal
from nvthermal.fitting import (DataSeries, FitOptions, RankDeficiencyError, fit_d_poly,
                               fit_mott_seitz, fit_phonon_shift, least_squares, numeric_jacobian)
from nvthermal.thermal import MottSeitzParams, PhononShiftParams

MS_TRUE = np.array([1.0, 200.0, 0.22])
PH_TRUE = np.array([246.0, 173.0])
T_MS = np.linspace(300, 700, 50)
T_PH = np.linspace(300, 520, 12)


def ms_data(noise=0.0, seed=0, scale=1.0):
    y = thermal.mott_seitz_intensity(MottSeitzParams(*MS_TRUE), T_MS)
    if noise:
        y = y * (1 + noise * np.random.default_rng(seed).normal(size=y.size))
    return DataSeries(T_MS, scale * y)


def ph_data(noise=0.0, seed=0):
    y = thermal.phonon_shift(PhononShiftParams(*PH_TRUE), T_PH)
    if noise:
        y = y + noise * np.random.default_rng(seed).normal(size=y.size)
    return DataSeries(T_PH, y)


def linear(x, th):
    return th[0] + th[1] * x


# --- DataSeries ------------------------------------------------------------------

def test_data_series_validation():
    d = DataSeries.from_points([(1, 2), (2, 3), (3, 4)])
    assert len(d) == 3 and d.sigma is None
    d = DataSeries.from_points([(1, 2, 0.1), (2, 3, 0.2)])
    np.testing.assert_array_equal(d.sigma, [0.1, 0.2])
    with pytest.raises(ValueError):
        DataSeries([1, 2], [1])
    with pytest.raises(ValueError):
        DataSeries([1, np.nan], [1, 2])
    with pytest.raises(ValueError):
        DataSeries([1, 2], [1, 2], [1, 0])


# --- least_squares -----------------------------------------------------------------

def test_linear_exact():
    d = DataSeries([0, 1, 2], [1, 3, 5])
    res = least_squares(linear, d, [0.0, 0.0], names=("b", "m"))
    np.testing.assert_allclose(res.params, [1, 2], atol=1e-10)
    assert res.residual_norm < 1e-20
    assert res.converged
    assert res["m"] == pytest.approx(2.0)


def test_linear_matches_closed_form_with_sigma(rng):
    x = np.linspace(0, 10, 25)
    sig = rng.uniform(0.5, 2, size=x.size)
    y = 3 - 0.7 * x + sig * rng.normal(size=x.size)
    res = least_squares(linear, DataSeries(x, y, sig), [0, 0])
    A = np.column_stack([np.ones_like(x), x]) / sig[:, None]
    coef, *_ = np.linalg.lstsq(A, y / sig, rcond=None)
    np.testing.assert_allclose(res.params, coef, rtol=1e-9)
    np.testing.assert_allclose(res.covariance, np.linalg.inv(A.T @ A), rtol=1e-6)


def test_covariance_scaled_without_sigma(rng):
    x = np.linspace(0, 10, 30)
    y = 1 + 2 * x + 0.3 * rng.normal(size=x.size)
    res = least_squares(linear, DataSeries(x, y), [0, 0])
    A = np.column_stack([np.ones_like(x), x])
    s2 = res.residual_norm / (x.size - 2)
    np.testing.assert_allclose(res.covariance, np.linalg.inv(A.T @ A) * s2, rtol=1e-6)
    np.testing.assert_allclose(res.uncertainties, np.sqrt(np.diag(res.covariance)))
    np.testing.assert_array_equal(res.covariance, res.covariance.T)


def test_non_convergence_is_reported():
    res = least_squares(lambda x, th: np.exp(th[0] * x), DataSeries([0, 1, 2, 3], [1, 3, 8, 30]),
                        [0.1], options=FitOptions(max_iter=1))
    assert not res.converged
    assert res.iterations == 1


def test_bounds_keep_parameters_inside():
    # unconstrained optimum has negative slope; a positive lower bound holds
    d = DataSeries([0, 1, 2, 3], [3, 2, 1, 0])
    res = least_squares(linear, d, [1, 1], bounds=([-np.inf, 0], [np.inf, np.inf]))
    assert res.params[1] >= 0
    assert res.params[1] < 1e-6
    with pytest.raises(ValueError):
        least_squares(linear, d, [1, -1], bounds=([-np.inf, 0], [np.inf, np.inf]))


def test_too_few_points():
    with pytest.raises(RankDeficiencyError):
        least_squares(linear, DataSeries([1.0], [1.0]), [0, 0])


def test_rank_deficient_model_names_parameters():
    model = lambda x, th: (th[0] + th[1]) * x
    with pytest.raises(RankDeficiencyError) as exc:
        least_squares(model, DataSeries([1, 2, 3], [2, 4, 6]), [0.5, 0.5], names=("a", "b"))
    assert set(exc.value.parameters) == {"a", "b"}
    insensitive = lambda x, th: th[0] * x
    with pytest.raises(RankDeficiencyError) as exc:
        least_squares(insensitive, DataSeries([1, 2, 3], [2, 4, 6]), [1.0, 1.0], names=("a", "b"))
    assert exc.value.parameters == ("b",)


def test_non_finite_model_reports_point():
    model = lambda x, th: np.where(x > 2, np.nan, th[0] * x)
    with pytest.raises(FloatingPointError, match=r"x=3\.0"):
        least_squares(model, DataSeries([1, 2, 3], [1, 2, 3]), [1.0])


# --- numeric_jacobian ---------------------------------------------------------------

def test_numeric_jacobian_linear_and_constant():
    x = np.array([0.0, 1.0, 5.0])
    J = numeric_jacobian(linear, x, [2.0, 3.0])
    np.testing.assert_allclose(J, np.column_stack([np.ones(3), x]), rtol=1e-9)
    J = numeric_jacobian(lambda x, th: np.full(x.shape, 4.0) + 0 * th[0], x, [1.0])
    np.testing.assert_array_equal(J, 0.0)


def test_numeric_jacobian_mott_seitz_example():
    J = numeric_jacobian(fitting.mott_seitz_model, np.array([480.0]), MS_TRUE)
    Ja = fitting.mott_seitz_jac(np.array([480.0]), MS_TRUE)
    assert J[0, 2] == pytest.approx(Ja[0, 2], rel=1e-6)


@pytest.mark.parametrize("model_name", ["mott-seitz", "phonon", "dpoly"])
def test_numeric_matches_analytic_jacobian(model_name):
    rng = np.random.default_rng(7)
    T = np.linspace(300, 700, 9)
    for _ in range(5):
        if model_name == "mott-seitz":
            th = np.array([rng.uniform(0.5, 2), rng.uniform(10, 1000), rng.uniform(0.1, 0.4)])
            model, jac = fitting.mott_seitz_model, fitting.mott_seitz_jac
        elif model_name == "phonon":
            th = np.array([rng.uniform(100, 400), rng.uniform(100, 250)])
            model, jac = fitting.phonon_model, fitting.phonon_jac
        else:
            th = np.array([2.88e9, rng.uniform(-1e4, 1e4), rng.uniform(-200, 0), rng.uniform(0, 1e-2)])
            model = lambda t, c: np.vander(t, 4, increasing=True) @ c
            jac = lambda t, c: np.vander(t, 4, increasing=True)
        Jn = numeric_jacobian(model, T, th)
        Ja = jac(T, th)
        np.testing.assert_allclose(Jn, Ja, rtol=1e-6, atol=1e-6 * np.abs(Ja).max())


# --- Mott-Seitz ----------------------------------------------------------------------

def test_mott_seitz_noise_free_from_given_start():
    res = fit_mott_seitz(ms_data(), theta0=(0.8, 100, 0.15))
    assert res.converged
    np.testing.assert_allclose(res.params, MS_TRUE, rtol=1e-6)


def test_mott_seitz_noise_free_default_initializer():
    res = fit_mott_seitz(ms_data())
    np.testing.assert_allclose(res.params, MS_TRUE, rtol=1e-6)
    assert "identifiability_warning" not in res.metadata


def test_mott_seitz_monte_carlo():
    inside = 0
    for seed in range(20):
        res = fit_mott_seitz(ms_data(0.01, seed))
        assert res.converged
        inside += 0.17 <= res["U_b"] <= 0.27
    assert inside >= 18


def test_mott_seitz_agrees_with_scipy():
    d = ms_data(0.01, 3)
    res = fit_mott_seitz(d)
    ref = scipy.optimize.least_squares(
        lambda th: fitting.mott_seitz_model(d.x, th) - d.y, [0.9, 150, 0.2],
        jac=lambda th: fitting.mott_seitz_jac(d.x, th), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    np.testing.assert_allclose(res.params, ref.x, rtol=1e-6)


def test_mott_seitz_half_intensity_shaped_data():
    # stand-in for a digitized decay curve: the published fit sampled every
    # 25 K in arbitrary units, with a fixed +-2% reading error
    T = np.arange(300.0, 701.0, 25.0)
    wiggle = 0.02 * np.sin(1.7 * np.arange(T.size))
    I = 3.4e4 * thermal.mott_seitz_intensity(MottSeitzParams(*MS_TRUE), T) * (1 + wiggle)
    res = fit_mott_seitz(DataSeries(T, I))
    assert 470 < thermal.half_intensity_temperature(MottSeitzParams(*res.params)) < 495
    assert 0.17 <= res["U_b"] <= 0.27


def test_mott_seitz_degenerate_inputs():
    with pytest.raises(RankDeficiencyError) as exc:
        fit_mott_seitz(DataSeries(T_MS, np.full(T_MS.size, 0.7)))
    assert set(exc.value.parameters) == {"C", "U_b"}
    T = np.linspace(400, 500, 10)
    narrow = fit_mott_seitz(DataSeries(T, thermal.mott_seitz_intensity(MottSeitzParams(*MS_TRUE), T)))
    assert "identifiability_warning" in narrow.metadata


def test_mott_seitz_history_monotone():
    res = fit_mott_seitz(ms_data(0.01, 1), theta0=(0.5, 20, 0.1))
    h = np.array(res.history)
    assert len(h) > 2
    assert np.all(np.diff(h) <= 0)


def test_reorder_invariance():
    d = ms_data(0.01, 5)
    perm = np.random.default_rng(11).permutation(len(d))
    a = fit_mott_seitz(d)
    b = fit_mott_seitz(DataSeries(d.x[perm], d.y[perm]))
    np.testing.assert_allclose(b.params, a.params, rtol=1e-8)


def test_scaling_invariance():
    d = ms_data(0.01, 6)
    sig = np.full(len(d), 0.01)
    a = fit_mott_seitz(DataSeries(d.x, d.y, sig))
    b = fit_mott_seitz(DataSeries(d.x, 7.5 * d.y, 7.5 * sig))
    assert b["I0"] == pytest.approx(7.5 * a["I0"], rel=1e-8)
    assert b["C"] == pytest.approx(a["C"], rel=1e-8)
    assert b["U_b"] == pytest.approx(a["U_b"], rel=1e-8)
    np.testing.assert_allclose(b.residual_norm, a.residual_norm, rtol=1e-8)


# --- phonon -----------------------------------------------------------------------

def test_phonon_noise_free():
    res = fit_phonon_shift(ph_data())
    assert res.converged
    np.testing.assert_allclose(res.params, PH_TRUE, rtol=1e-6)


def test_phonon_monte_carlo():
    inside = sum(abs(fit_phonon_shift(ph_data(2.0, seed))["hbar_omega0"] - 173) <= 10
                 for seed in range(20))
    assert inside >= 16


def test_phonon_reference_temperature():
    base = thermal.phonon_shift(PhononShiftParams(*PH_TRUE), 300.0)
    d = ph_data()
    res = fit_phonon_shift(DataSeries(d.x, d.y - base), reference_T=300.0)
    np.testing.assert_allclose(res.params, PH_TRUE, rtol=1e-6)


def test_phonon_scaling_keeps_omega():
    d = ph_data(2.0, 4)
    a = fit_phonon_shift(d)
    b = fit_phonon_shift(DataSeries(d.x, 3 * d.y))
    assert b["hbar_omega0"] == pytest.approx(a["hbar_omega0"], rel=1e-8)
    assert b["A"] == pytest.approx(3 * a["A"], rel=1e-8)


def test_phonon_all_zero():
    with pytest.raises(RankDeficiencyError) as exc:
        fit_phonon_shift(DataSeries(T_PH, np.zeros(T_PH.size)))
    assert "hbar_omega0" in exc.value.parameters


# --- D(T) polynomial ------------------------------------------------------------------

def test_d_poly_exact_cubic():
    c = np.array([2.88e9, 1e3, -120.0, 1.5e-3])
    T = np.array([0.0, 150.0, 300.0, 500.0])
    res = fit_d_poly(DataSeries(T, np.vander(T, 4, increasing=True) @ c))
    np.testing.assert_allclose(res.params, c, rtol=1e-9, atol=1e-12)


def test_d_poly_degree_zero_mean(rng):
    y = rng.normal(size=7) * 1e6 + 2.87e9
    res = fit_d_poly(DataSeries(np.arange(7.0) * 50, y), degree=0)
    assert res["a0"] == pytest.approx(np.mean(y), rel=1e-14)


def test_d_poly_anchor_round_trip():
    p = thermal.anchored_d_poly(2.88e9, 500.0, -32e6, 480.0, -4.3e-5)
    T = np.linspace(0, 600, 25)
    res = fit_d_poly(DataSeries(T, thermal.d_of_t(p, T)))
    q = fitting.d_poly_params(res)
    assert thermal.d_of_t(q, 0) == pytest.approx(2.88e9, rel=1e-9)
    assert thermal.delta_d(q, 500) == pytest.approx(-32e6, rel=1e-9)


def test_d_poly_errors():
    with pytest.raises(RankDeficiencyError):
        fit_d_poly(DataSeries([1, 2, 3], [1, 2, 3]), degree=3)
    with pytest.raises(RankDeficiencyError):
        fit_d_poly(DataSeries([1, 1, 2, 2], [1, 2, 3, 4]), degree=3)
    with pytest.raises(ValueError):
        fit_d_poly(DataSeries([1, 2, 3], [1, 2, 3]), degree=4)


def test_converged_results_are_stationary():
    for res in (fit_mott_seitz(ms_data(0.01, 2)), fit_phonon_shift(ph_data(2.0, 2)),
                fit_mott_seitz(ms_data())):
        assert res.converged
        assert res.grad_norm <= 1e-8 * max(1.0, res.residual_norm)
        assert res.message in ("gradient below gtol", "step below xtol")
