import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rmtquench import analytic as an
from rmtquench import montecarlo as mc

SEED = 7


# ----------------------------------------------------------------- accumulator


def _acc(x, covariance=False):
    return mc.Accumulator(covariance).push_batch(x)


_samples = arrays(np.float64, st.tuples(st.integers(2, 40), st.just(3)), elements=st.floats(-1e3, 1e3))


@given(a=_samples, b=_samples, c=_samples)
def test_merge_is_associative_and_commutative(a, b, c):
    left = _acc(a).merge(_acc(b)).merge(_acc(c))
    right = _acc(a).merge(_acc(b).merge(_acc(c)))
    swapped = _acc(c).merge(_acc(a)).merge(_acc(b))
    for other in (right, swapped):
        assert other.count == left.count
        np.testing.assert_allclose(other.mean, left.mean, rtol=1e-12, atol=1e-9)
        np.testing.assert_allclose(other.m2, left.m2, rtol=1e-12, atol=1e-6)


@given(a=_samples, b=_samples)
def test_merge_matches_two_pass(a, b):
    acc = _acc(a).merge(_acc(b))
    x = np.concatenate([a, b])
    np.testing.assert_allclose(acc.mean, x.mean(axis=0), rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(acc.variance, x.var(axis=0, ddof=1), rtol=1e-9, atol=1e-6)
    cov = _acc(a, True).merge(_acc(b, True))
    np.testing.assert_allclose(cov.variance, np.cov(x.T), rtol=1e-9, atol=1e-6)


def test_streaming_updates_match_batch():
    x = np.random.default_rng(1).normal(size=(50, 2)) + 1j
    acc = mc.Accumulator()
    for row in x:
        acc.update(row)
    np.testing.assert_allclose(acc.mean, x.mean(axis=0))
    np.testing.assert_allclose(acc.stderr, np.sqrt(np.var(x, axis=0, ddof=1) / 50))


def test_stderr_needs_two_samples():
    acc = mc.Accumulator().update(np.array([1.0]))
    with pytest.raises(mc.InsufficientSamplesError):
        acc.stderr


# ----------------------------------------------------------------- preconditions


def test_preconditions():
    with pytest.raises(mc.InsufficientSamplesError):
        mc.mc_chi(3, 0.0, [0.0, 1.0], 99, SEED)
    with pytest.raises(mc.InsufficientSamplesError):
        mc.mc_mean_work(3, 0.0, 10, SEED)
    with pytest.raises(ValueError):
        mc.mc_work_pdf(3, 0.0, 200, 5, SEED)
    with pytest.raises(ValueError):
        mc.mc_loschmidt(3, 0.0, [1.0], 200, SEED, mode="quenched")


# ----------------------------------------------------------------- estimators


def test_chi_at_zero_is_one():
    c = mc.mc_chi(4, 1.3, [0.0, 0.5], 300, SEED)
    assert abs(c.values[0] - 1) <= 1e-12


def test_chi_infinite_temperature_agreement():
    t = np.linspace(0, 3, 61)
    c = mc.mc_chi(5, 0.0, t, 5000, SEED)
    ref = an.chi(5, 0.0, t)
    assert np.all(np.abs(c.values.real - ref.real) <= 5 * c.stderr.real + 1e-12)
    assert np.all(np.abs(c.values.imag - ref.imag) <= 5 * c.stderr.imag + 1e-12)
    assert c.meta["seed"] == SEED


def test_work_histogram_invariants():
    h = mc.mc_work_pdf(4, 1.0, 500, 40, SEED)
    assert h.mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(h.mass >= 0) and np.all(np.diff(h.edges) > 0)
    assert h.density.shape == h.centers.shape == (40,)
    ha = mc.mc_work_pdf(4, 1.0, 500, 40, SEED, mode="annealed")
    assert ha.mass.sum() == pytest.approx(1.0, abs=1e-12)


def test_work_histogram_symmetric_at_infinite_temperature():
    h = mc.mc_work_pdf(3, 0.0, 5000, 40, SEED)
    se = np.hypot(h.stderr, h.stderr[::-1])
    assert np.all(np.abs(h.mass - h.mass[::-1]) <= 3 * se + 1e-12)


def test_histogram_mean_equals_exact_mean_work():
    h = mc.mc_work_pdf(5, 1.0, 5000, 60, SEED)
    est = mc.mc_mean_work(5, 1.0, 5000, SEED, mode="exact")
    # same pairs, same per-pair quantity: agreement is far tighter than 3 SE
    assert abs(h.mean - est.value) <= 1e-10
    assert abs(h.mean - est.value) <= 3 * est.stderr


def test_histogram_l1_small_n():
    from rmtquench.acceptance import _bin_masses

    h = mc.mc_work_pdf(2, 0.0, 20000, 60, SEED)
    ref = _bin_masses(2, 0.0, h.edges)
    assert np.abs(h.mass - ref).sum() <= 0.02


@pytest.mark.parametrize("mode", ["annealed", "exact"])
def test_mean_work_vanishes_at_infinite_temperature(mode):
    est = mc.mc_mean_work(8, 0.0, 2000, SEED, mode=mode)
    assert abs(est.value) <= 3 * est.stderr


def test_mean_work_annealed_agreement():
    est = mc.mc_mean_work(4, 1.0, 20000, SEED, mode="annealed")
    assert abs(est.value - an.mean_work(4, 1.0)) <= 3 * est.stderr


def test_mean_work_exact_below_annealed_at_low_temperature():
    est = mc.mc_mean_work(4, 3.0, 20000, SEED, mode="exact")
    assert an.mean_work(4, 3.0) - est.value > 3 * est.stderr


def test_beta_array_matches_scalar_calls():
    betas = np.array([0.0, 0.5, 2.0])
    arr = mc.mc_work_variance(3, betas, 300, SEED, mode="exact")
    for k, b in enumerate(betas):
        one = mc.mc_work_variance(3, float(b), 300, SEED, mode="exact")
        assert one.value == arr.value[k]
        assert one.stderr == arr.stderr[k]


def test_variance_infinite_temperature():
    est = mc.mc_work_variance(20, 0.0, 3000, SEED)
    assert abs(est.value - 20) <= 3 * est.stderr


def test_variance_modes_agree_at_low_temperature():
    a = mc.mc_work_variance(4, 3.0, 50000, SEED, mode="annealed")
    e = mc.mc_work_variance(4, 3.0, 50000, SEED, mode="exact")
    assert abs(a.value - e.value) <= 3 * np.hypot(a.stderr, e.stderr)


def test_stderr_scales_as_inverse_sqrt():
    small = mc.mc_mean_work(5, 1.0, 1000, SEED)
    large = mc.mc_mean_work(5, 1.0, 4000, SEED)
    ratio = small.stderr / large.stderr
    assert 2 / 1.5 <= ratio <= 2 * 1.5


def test_echo_modes_and_trivial_points():
    t = np.array([0.0, 0.3, 2.0])
    a = mc.mc_loschmidt(4, 0.0, t, 400, SEED, mode="annealed")
    e = mc.mc_loschmidt(4, 0.0, t, 400, SEED, mode="exact")
    assert abs(a.values[0] - 1) <= 1e-12 and abs(e.values[0] - 1) <= 1e-12
    # Z(0) = N is not random, so both reductions coincide
    np.testing.assert_allclose(a.values, e.values, rtol=1e-12)


def test_echo_tracks_analytic_log_grid():
    t = np.geomspace(1e-2, 1e3, 120)
    c = mc.mc_loschmidt(5, 0.0, t, 2000, SEED)
    assert np.all(np.abs(c.values - an.loschmidt_echo(5, 0.0, t)) <= 5 * c.stderr + 1e-12)


def test_exact_plateau_below_annealed():
    t = np.linspace(60, 100, 81)
    win = (60.0, 100.0)
    a = mc.mc_loschmidt(5, 1.0, t, 5000, SEED, mode="annealed", window=win)
    e = mc.mc_loschmidt(5, 1.0, t, 5000, SEED, mode="exact", window=win)
    assert e.meta["window_mean"] < a.meta["window_mean"]
    assert abs(a.meta["window_mean"] - an.echo_plateau(5, 1.0)) <= 5 * a.meta["window_stderr"]
    pred, pse = e.meta["exact_plateau"], e.meta["exact_plateau_stderr"]
    assert abs(e.meta["window_mean"] - pred) <= 5 * np.hypot(e.meta["window_stderr"], pse)


def test_frame_potential_identity():
    t = np.array([0.0, 0.4, 3.0, 40.0])
    f = mc.mc_frame_potential(3, t, 300, SEED)
    L = mc.mc_loschmidt(3, 0.0, t, 300, SEED)
    assert np.max(np.abs(f.values - 9 * L.values)) == 0
    assert abs(f.values[0] - 9) <= 1e-12


def test_overlap_moments_first_order():
    first, second = mc.mc_overlap_moments(4, 5000, SEED)
    assert np.all(np.abs(first.value - 0.25) <= 4 * first.stderr)
    assert second.value.shape == (4, 4, 4, 4)


@pytest.mark.parametrize("threads", [2, 5])
def test_thread_count_does_not_change_results(threads):
    t = np.geomspace(0.1, 10, 9)
    one = mc.mc_loschmidt(4, 1.0, t, 700, SEED, mode="exact", threads=1)
    many = mc.mc_loschmidt(4, 1.0, t, 700, SEED, mode="exact", threads=threads)
    assert np.array_equal(one.values, many.values)
    assert np.array_equal(one.stderr, many.stderr)
    h1 = mc.mc_work_pdf(4, 1.0, 700, 20, SEED, threads=1)
    hk = mc.mc_work_pdf(4, 1.0, 700, 20, SEED, threads=threads)
    assert np.array_equal(h1.mass, hk.mass)


def test_overflow_free_boltzmann_weights():
    # beta * sqrt(2N) ~ 1e3
    est = mc.mc_mean_work(8, 250.0, 200, SEED, mode="exact")
    assert np.isfinite(est.value) and np.isfinite(est.stderr)
