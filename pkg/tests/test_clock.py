import math

import mpmath
import numpy as np
import pytest
from scipy import special as sp
from scipy import stats

from qclock import clock
from qclock.clock import ClockKind, ClockModel
from qclock.errors import (
    BranchDomain,
    InvalidDuration,
    InvalidGrid,
    InvalidOrder,
    InvalidThreshold,
    InvalidTime,
    OverflowSaturation,
    QClockError,
)

GAMMA10 = ClockModel.gamma(10.0)
MODELS = [ClockModel.gamma(10.0), ClockModel.inverse_gaussian(10.0)]


def test_model_validation():
    with pytest.raises(QClockError):
        ClockModel.gamma(0.0)
    with pytest.raises(QClockError):
        ClockModel.gamma(float("inf"))
    m = ClockModel.from_lambda("ig", 0.25)
    assert m.kind is ClockKind.INVERSE_GAUSSIAN
    assert m.kappa == 4.0 and m.lam == 0.25


@pytest.mark.parametrize("kappa", [1.0, 3.0, 10.0, 49.0, 1e19])
def test_lambda_kappa_product(kappa):
    m = ClockModel.gamma(kappa)
    assert m.lam * m.kappa == pytest.approx(1.0, rel=2.3e-16)


# ---------------------------------------------------------------- sampling


def _se_mean(x):
    return x.std(ddof=1) / math.sqrt(len(x))


def test_gamma_increment_mean_and_variance():
    x = clock.sample_increment(GAMMA10, 0.1, np.random.default_rng(1), size=1_000_000)
    assert abs(x.mean() - 0.1) <= 3 * _se_mean(x)
    # Var = dt / kappa = 0.01; se of the sample variance from the fourth central moment
    c = x - x.mean()
    se_var = math.sqrt((np.mean(c**4) - np.mean(c**2) ** 2) / len(x))
    assert abs(x.var(ddof=1) - 0.01) <= 4 * se_var
    assert abs(np.mean(x**2) - 0.02) <= 3 * _se_mean(x**2)


@pytest.mark.parametrize("model", MODELS + [ClockModel.gamma(1e-2), ClockModel.inverse_gaussian(1e-3)])
def test_increments_nonnegative(model):
    x = clock.sample_increment(model, 0.01, np.random.default_rng(2), size=100_000)
    assert x.min() >= 0.0
    assert np.all(np.isfinite(x))


def test_gamma_small_shape_distribution():
    # shape kappa*dt = 0.05, well inside the boosted small-shape regime
    model = ClockModel.gamma(0.5)
    x = clock.sample_increment(model, 0.1, np.random.default_rng(3), size=200_000)
    assert stats.kstest(x, stats.gamma(a=0.05, scale=2.0).cdf).pvalue > 1e-3


def test_inverse_gaussian_distribution():
    # mean dt, shape kappa dt^2 / 2
    model = ClockModel.inverse_gaussian(10.0)
    dt = 0.3
    x = clock.sample_increment(model, dt, np.random.default_rng(4), size=200_000)
    shape = 0.5 * model.kappa * dt**2
    ref = stats.invgauss(mu=dt / shape, scale=shape)
    assert stats.kstest(x, ref.cdf).pvalue > 1e-3
    assert abs(x.mean() - dt) <= 4 * _se_mean(x)


def test_inverse_gaussian_variance_matches_c2():
    model = ClockModel.inverse_gaussian(10.0)
    dt = 0.05
    x = clock.sample_increment(model, dt, np.random.default_rng(5), size=1_000_000)
    c = x - x.mean()
    se_var = math.sqrt((np.mean(c**4) - np.mean(c**2) ** 2) / len(x))
    assert abs(x.var(ddof=1) - clock.cn_coefficient(model, 2) * dt) <= 4 * se_var


def test_inverse_gaussian_extreme_parameters_stay_finite():
    model = ClockModel.inverse_gaussian(1e-6)
    x = clock.sample_increment(model, 1e-4, np.random.default_rng(6), size=10_000)
    assert np.all(np.isfinite(x)) and x.min() >= 0.0


def test_sample_increment_rejects_bad_duration():
    with pytest.raises(InvalidDuration):
        clock.sample_increment(GAMMA10, 0.0, 1)


def test_path_basic_properties():
    grid = np.linspace(0.0, 1.0, 1001)
    path = clock.sample_path(ClockModel.gamma(100.0), grid, np.random.default_rng(8))
    assert path.values[0] == 0.0
    assert np.all(np.diff(path.values) >= 0.0)
    assert abs(path.values[-1] - 1.0) <= 5.0 * math.sqrt(1.0 / 100.0)


def test_path_is_seed_deterministic():
    grid = np.linspace(0.0, 2.0, 301)
    for model in MODELS:
        a = clock.sample_path(model, grid, 42)
        b = clock.sample_path(model, grid, np.random.default_rng(42))
        assert np.array_equal(a.values, b.values)


def test_path_single_point():
    path = clock.sample_path(GAMMA10, [0.0], 0)
    assert path.values.tolist() == [0.0]


@pytest.mark.parametrize("grid", [[], [0.1, 0.2], [0.0, 0.5, 0.5], [0.0, 0.3, 0.2]])
def test_path_invalid_grid(grid):
    with pytest.raises(InvalidGrid):
        clock.sample_path(GAMMA10, grid, 0)


def test_small_kappa_paths_are_dominated_by_rare_jumps():
    grid = np.linspace(0.0, 1.0, 1001)
    small, large, visible = [], [], []
    for seed in range(200):
        p = clock.sample_path(ClockModel.gamma(0.01), grid, seed)
        inc = np.diff(p.values)
        visible.append(int(np.sum(inc > 1e-3)))
        if p.values[-1] > 0.0:
            small.append(inc.max() / p.values[-1])
        q = clock.sample_path(ClockModel.gamma(100.0), grid, seed)
        large.append(np.diff(q.values).max() / q.values[-1])
    assert max(visible) <= 5
    assert np.median(small) >= 0.99
    assert np.median(large) < 0.1


def test_child_seeds_match_spawn():
    spawned = np.random.SeedSequence(99).spawn(5)
    for i, s in enumerate(spawned):
        a = np.random.default_rng(clock.child_seed(99, i)).random(4)
        assert np.array_equal(a, np.random.default_rng(s).random(4))


# ---------------------------------------------------------------- moments


@pytest.mark.parametrize("model", MODELS)
def test_mgf_normalization_and_mean(model):
    assert clock.mgf(model, 0.0, 2.0) == 1.0
    t, h = 1.7, 1e-6
    deriv = (clock.mgf(model, h, t) - clock.mgf(model, -h, t)) / (2 * h)
    assert abs(deriv.real - t) <= 1e-6 * t


def test_gamma_mgf_modulus_on_imaginary_axis():
    k, t = 3.0, 2.5
    model = ClockModel.gamma(k)
    for nu in [0.1, 1.6, 7.0, 100.0]:
        expected = math.exp(-(k * t / 2.0) * math.log(1.0 + nu**2 / k**2))
        assert abs(clock.mgf(model, -1j * nu, t)) == pytest.approx(expected, rel=1e-13)


def test_mgf_against_closed_forms_with_principal_branches():
    for alpha in [0.5, -3.0, 2 - 5j, -1 + 40j]:
        t = 0.7
        g = ClockModel.gamma(10.0)
        assert clock.mgf(g, alpha, t) == pytest.approx(complex(mpmath.power(1 - alpha / 10.0, -10.0 * t)), rel=1e-12)
        ig = ClockModel.inverse_gaussian(10.0)
        ref = mpmath.exp(5.0 * (1 - mpmath.sqrt(1 - 4 * alpha / 10.0)) * t)
        assert clock.mgf(ig, alpha, t) == pytest.approx(complex(ref), rel=1e-12)


def test_mgf_branch_domain():
    with pytest.raises(BranchDomain):
        clock.mgf(ClockModel.gamma(2.0), 2.0, 1.0)
    with pytest.raises(BranchDomain):
        clock.mgf(ClockModel.inverse_gaussian(4.0), 1.5, 1.0)
    assert abs(clock.mgf(ClockModel.inverse_gaussian(4.0), 1.0, 1.0)) > 0
    with pytest.raises(InvalidTime):
        clock.mgf(GAMMA10, 0.1, -1.0)


def test_cn_closed_form_values():
    g = ClockModel.from_lambda("gamma", 0.1)
    ig = ClockModel.from_lambda("ig", 0.1)
    assert clock.cn_coefficient(g, 2) == pytest.approx(0.1, rel=1e-15)
    assert clock.cn_coefficient(g, 4) == pytest.approx(0.006, rel=1e-14)
    assert clock.cn_coefficient(ig, 3) == pytest.approx(0.12, rel=1e-14)


def _cumulant_rate(model, a):
    k = mpmath.mpf(model.kappa)
    if model.kind is ClockKind.GAMMA:
        return -k * mpmath.log(1 - a / k)
    return (k / 2) * (1 - mpmath.sqrt(1 - 4 * a / k))


@pytest.mark.parametrize("kind", ["gamma", "ig"])
@pytest.mark.parametrize("n", range(2, 7))
def test_cn_matches_finite_difference_cumulants(kind, n):
    model = ClockModel.from_lambda(kind, 0.1)
    with mpmath.workdps(40):
        fd = mpmath.diff(lambda a: _cumulant_rate(model, a), 0, n)
    assert clock.cn_coefficient(model, n) == pytest.approx(float(fd), rel=1e-4)


def test_cn_log_space_and_errors():
    model = ClockModel.gamma(2.0)
    assert clock.cn_coefficient(model, 40) == pytest.approx(math.exp(math.lgamma(40) - 39 * math.log(2.0)), rel=1e-12)
    with pytest.raises(InvalidOrder):
        clock.cn_coefficient(model, 1)
    with pytest.raises(OverflowSaturation):
        clock.cn_coefficient(ClockModel.gamma(1e-3), 100)


def test_gamma_raw_moment_values():
    assert clock.gamma_raw_moment(10.0, 1, 0.37) == 0.37
    assert clock.gamma_raw_moment(10.0, 3, 0.1) == pytest.approx(0.006, rel=1e-14)
    with pytest.raises(InvalidOrder):
        clock.gamma_raw_moment(10.0, 0, 0.1)


@pytest.mark.parametrize("kappa", [0.5, 10.0, 300.0])
def test_gamma_second_moment_rate_tends_to_c2(kappa):
    c2 = clock.cn_coefficient(ClockModel.gamma(kappa), 2)
    errors = []
    for dt in [1e-2, 1e-4, 1e-6]:
        rate = (clock.gamma_raw_moment(kappa, 2, dt) - dt**2) / dt
        errors.append(abs(rate - c2))
    assert errors[-1] <= 1e-9 * max(1.0, c2)


def test_gamma_raw_moment_matches_scipy():
    dist = stats.gamma(a=10.0 * 0.3, scale=0.1)
    for n in range(1, 6):
        assert clock.gamma_raw_moment(10.0, n, 0.3) == pytest.approx(dist.moment(n), rel=1e-12)


# ---------------------------------------------------------------- ticks


def test_levy_tail_rate_planck_scale():
    assert clock.levy_tail_rate(1e19, 5.39e-44) == pytest.approx(5.53e20, rel=5e-3)


def test_levy_tail_rate_moderate():
    assert clock.levy_tail_rate(1.0, 1.0) == pytest.approx(0.21938393439551238, abs=1e-5)


def test_levy_tail_rate_monotone_in_delta():
    deltas = np.geomspace(1e-30, 1e2, 200)
    rates = [clock.levy_tail_rate(1.0, d) for d in deltas]
    assert all(a > b for a, b in zip(rates, rates[1:]) if b > 0)
    assert rates[-1] == 0.0 or rates[-1] < 1e-40


def test_levy_tail_rate_monotone_in_kappa_below_crossover():
    delta = 1e-3
    kappas = np.geomspace(1e-3, 0.4 / delta, 200)
    rates = [clock.levy_tail_rate(k, delta) for k in kappas]
    assert all(a < b for a, b in zip(rates, rates[1:]))
    # above kappa*delta ~ 0.435 the tail rate decreases again
    assert clock.levy_tail_rate(5.0 / delta, delta) < clock.levy_tail_rate(1.0 / delta, delta)


def test_levy_tail_rate_errors():
    with pytest.raises(InvalidThreshold):
        clock.levy_tail_rate(1.0, 0.0)


def test_poisson_probabilities():
    p1 = clock.prob_at_least_one_tick(1e19, 5.39e-44, 1e-21)
    assert p1 == pytest.approx(0.425, abs=5e-3)
    assert clock.poisson_tick_probability(0, 1e19, 5.39e-44, 1e-21) == pytest.approx(1 - p1, rel=1e-14)
    total = math.fsum(clock.poisson_tick_probability(n, 1e19, 5.39e-44, 3e-20) for n in range(200))
    assert abs(total - 1.0) <= 1e-10
    assert clock.poisson_tick_probability(0, 1e19, 5.39e-44, 1e-40) == pytest.approx(1.0, abs=1e-18)
    with pytest.raises(InvalidDuration):
        clock.poisson_tick_probability(0, 1.0, 1.0, 0.0)
    with pytest.raises(InvalidThreshold):
        clock.prob_at_least_one_tick(1.0, -1.0, 1.0)


# ---------------------------------------------------------------- Fisher


def test_fisher_information_values():
    t = 30e9 * 365.25 * 86400.0
    assert clock.fisher_information(1e19, t) == pytest.approx(1e19 / t, rel=1e-12)
    assert clock.fisher_information(1e19, t) == pytest.approx(10.56, rel=1e-3)
    assert clock.fisher_information(4.0, 0.25) == pytest.approx(16.0 * math.pi**2 / 6.0, rel=1e-14)
    with pytest.raises(InvalidTime):
        clock.fisher_information(1.0, 0.0)


@pytest.mark.parametrize("kappa,t", [(2.0, 0.7), (10.0, 3.0), (0.5, 0.2)])
def test_fisher_information_matches_score_variance(kappa, t):
    x = clock.sample_increment(ClockModel.gamma(kappa), t, np.random.default_rng(11), size=100_000)
    score = kappa * math.log(kappa) + kappa * np.log(x) - kappa * sp.digamma(kappa * t)
    c = score - score.mean()
    var = np.mean(c**2)
    se = math.sqrt((np.mean(c**4) - var**2) / len(x))
    assert abs(var - clock.fisher_information(kappa, t)) <= 3 * se
