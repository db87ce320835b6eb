import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats
from scipy.integrate import cumulative_trapezoid, trapezoid

from smallworld import proposals as pp
from smallworld import targets as tg
from smallworld.errors import UsageError
from smallworld.mh_engine import make_rng

CIRCLE = tg.two_mode_circle_target(5.0, 1.0)
FLAT = tg.mixture_target([tg.exponential_piece([0.0], 1.0, tg.Interval(-6, 6))])


def draws_1d(kernel, n, seed=0, x=0.0):
    rng = make_rng(seed)
    d = kernel.draw(rng, n)
    return kernel.apply(np.full((n, 1), x), d)[:, 0]


# -- sampler examples ---------------------------------------------------------------


def test_ball_draws_uniform_with_zero_mean():
    y = draws_1d(pp.ball(1.0), 100_000)
    assert abs(y.mean()) < 0.01
    assert y.min() >= -1.0 and y.max() <= 1.0


def test_mixture_heavy_fraction_is_s():
    k = pp.mixture(pp.ball(1.0), pp.cauchy(2.0), 1 / 3)
    d = k.draw(make_rng(3), 100_000)
    assert d.heavy.mean() == pytest.approx(1 / 3, abs=0.01)


def test_cauchy_median_displacement_is_half_width():
    y = draws_1d(pp.cauchy(2.0), 100_000, seed=4)
    assert np.median(np.abs(y)) == pytest.approx(2.0, abs=0.05)
    assert stats.halfcauchy(scale=2.0).median() == pytest.approx(2.0)


# -- density examples ---------------------------------------------------------------


def test_cauchy_density_at_zero_offset():
    assert float(pp.eval_density(pp.cauchy(1.0), [0.0], [0.0])) == pytest.approx(1 / math.pi, abs=1e-5)


def test_ball_density_outside_radius_is_zero():
    assert float(pp.eval_density(pp.ball(2.0), [0.0], [3.0])) == 0.0
    assert float(pp.eval_density(pp.ball(2.0), [0.0], [1.5])) == pytest.approx(0.25)


def test_uniform_on_circle_is_one_over_perimeter():
    k = pp.uniform_support(CIRCLE)
    xs = np.linspace(-9.9, 9.9, 17)[:, None]
    assert np.allclose(k.density(np.zeros_like(xs), xs), 1 / 20)


def test_cauchy_2d_normalizer():
    # c_2 = Γ(3/2)/π^{3/2} = 1/(2π)
    k = pp.cauchy(1.0, dimension=2)
    assert float(k.density(np.zeros((1, 2)), np.zeros((1, 2)))[0]) == pytest.approx(1 / (2 * math.pi))


@pytest.mark.parametrize("kernel", [pp.ball(1.5), pp.cauchy(0.7), pp.mixture(pp.ball(1.0), pp.cauchy(2.0), 0.3)])
def test_density_integrates_to_one_in_1d(kernel):
    r = np.linspace(-2000, 2000, 2_000_001)
    f = kernel.density(np.zeros((r.size, 1)), r[:, None])
    mass = trapezoid(f, r)
    assert mass == pytest.approx(1.0, abs=2e-3)  # Cauchy tail beyond 2000 is < 1e-3


def test_mixture_weight_boundaries():
    loc, hv = pp.ball(1.0), pp.cauchy(1.0)
    assert pp.mixture(loc, hv, 0.0) is loc
    assert pp.mixture(loc, hv, 1.0) is hv
    with pytest.raises(UsageError):
        pp.MixtureKernel(loc, hv, 1.0)
    with pytest.raises(UsageError):
        pp.mixture(loc, hv, 1.5)


def test_default_heavy_width_is_max_barycenter_distance():
    k = pp.heavy_kernel(CIRCLE, "cauchy")
    assert k.b == pytest.approx(10.0)


# -- sampler/density agreement ---------------------------------------------------------


def quadrature_cdf(kernel, lo, hi, n=400_001):
    r = np.linspace(lo, hi, n)
    f = kernel.density(np.zeros((n, 1)), r[:, None])
    F = cumulative_trapezoid(f, r, initial=0.0)
    return lambda y: np.interp(y, r, F / F[-1])


@pytest.mark.parametrize(
    "kernel,lo,hi",
    [
        (pp.ball(1.0), -1.0, 1.0),
        (pp.cauchy(1.0, CIRCLE), -10.0, 10.0),
        (pp.uniform_support(CIRCLE), -10.0, 10.0),
        (pp.small_world(CIRCLE, 1.0, 1 / 3, "uniform"), -10.0, 10.0),
        (pp.small_world(CIRCLE, 1.0, 1 / 3, "cauchy"), -10.0, 10.0),
    ],
)
def test_ks_sampler_matches_density(kernel, lo, hi):
    y = draws_1d(kernel, 100_000, seed=11)
    ks = stats.kstest(y, quadrature_cdf(kernel, lo, hi))
    assert ks.statistic < 0.01


def test_flat_cauchy_matches_scipy_cdf():
    y = draws_1d(pp.cauchy(2.5), 100_000, seed=12)
    assert stats.kstest(y, stats.cauchy(scale=2.5).cdf).statistic < 0.01


def test_ball_2d_draws_fill_disc_uniformly():
    k = pp.ball(1.0, dimension=2)
    d = k.draw(make_rng(5), 100_000).values
    r = np.linalg.norm(d, axis=1)
    assert r.max() <= 1.0
    assert stats.kstest(r, lambda t: np.clip(t, 0, 1) ** 2).statistic < 0.01


# -- exact identities ------------------------------------------------------------------


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_mixture_density_identity(x, y):
    loc, hv, s = pp.ball(1.0, CIRCLE), pp.cauchy(3.0, CIRCLE), 0.3
    mix = pp.mixture(loc, hv, s)
    a, b = np.array([x]), np.array([y])
    expect = (1 - s) * pp.eval_density(loc, a, b) + s * pp.eval_density(hv, a, b)
    assert pp.eval_density(mix, a, b) == expect


@pytest.mark.parametrize(
    "kernel",
    [pp.ball(1.3, CIRCLE), pp.cauchy(2.0, CIRCLE), pp.uniform_support(CIRCLE), pp.cauchy(1.0), pp.ball(0.5, FLAT)],
)
def test_symmetry_at_random_pairs(kernel):
    r = np.random.default_rng(7)
    x = r.uniform(-12, 12, (1000, 1))
    y = r.uniform(-12, 12, (1000, 1))
    if isinstance(kernel, pp.UniformSupportKernel):
        x, y = CIRCLE.wrap(x), CIRCLE.wrap(y)
    assert np.allclose(kernel.density(x, y), kernel.density(y, x), rtol=0, atol=1e-15)


def test_circle_kernel_draws_stay_on_circle():
    y = draws_1d(pp.cauchy(5.0, CIRCLE), 10_000, x=9.5)
    assert np.all((y >= -10.0) & (y < 10.0))


@pytest.mark.parametrize("b", [0.3, 2.0, 10.0, 60.0])
def test_wrapped_cauchy_integrates_to_one_on_circle(b):
    k = pp.cauchy(b, CIRCLE)
    r = np.linspace(-10, 10, 200_001)
    assert trapezoid(k.density(np.zeros((r.size, 1)), r[:, None]), r) == pytest.approx(1.0, abs=1e-8)
    assert float(pp.cell_mass_1d(k, -10.0, 10.0, 20.0)) == pytest.approx(1.0, abs=1e-12)


def test_cell_mass_matches_offset_mass_without_wrap():
    k = pp.cauchy(1.0)
    assert float(pp.cell_mass_1d(k, -0.5, 0.5)) == pytest.approx(2 * math.atan(0.5) / math.pi)
