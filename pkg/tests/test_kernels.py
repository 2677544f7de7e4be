import math

import numpy as np
import pytest
from scipy.integrate import quad

from paircorr.errors import InvalidSpec
from paircorr.kernels import (MuSampler, WeightKernel, conv_K_lower_bound, density, fourier, mu_cdf,
                              mu_tail_mass, sample_mu)

MU = WeightKernel.mu()


def test_density_values():
    assert density(MU, 0.0) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert density(MU, math.pi) == pytest.approx(2 / math.pi ** 3, rel=1e-14)
    k = WeightKernel.conv_K(100, 0.2)
    assert density(k, 0.0) == pytest.approx(1.05 * math.log(100) / math.pi, rel=1e-15)
    # tiny x goes through the series branch without cancellation
    assert density(MU, 1e-9) == pytest.approx(1 / (2 * math.pi), rel=1e-15)


def test_fourier_values():
    assert fourier(MU, 0.0) == 1.0
    assert fourier(MU, 1.5) == 0.0
    assert fourier(WeightKernel.gauss_phi(), 0.0) == pytest.approx(math.sqrt(2 * math.pi))
    assert fourier(WeightKernel.mu2gamma(0.5), 0.5) == pytest.approx(0.5)
    k = WeightKernel.conv_K(64, 0.4)
    edge = 2 * 1.1 * math.log(64)
    assert fourier(k, edge * 1.0001) == 0.0 and fourier(k, edge * 0.5) == pytest.approx(0.5)


def _inv_sq_cos_tail(L, w):
    """int_L^inf cos(w x) / (pi x^2) dx"""
    if w == 0:
        return 1.0 / (math.pi * L)
    return quad(lambda x: 1.0 / (math.pi * x * x), L, np.inf, weight="cos", wvar=abs(w), limlst=200)[0]


@pytest.mark.parametrize("xi", [0.0, 0.25, 0.5, 0.99])
def test_fourier_by_quadrature(xi):
    # head on [0, L] directly; tail from (1 - cos x) cos(xi x) = cos(xi x) - cos((1+xi)x)/2 - cos((1-xi)x)/2
    L = 40.0
    f = lambda x: density(MU, x)
    if xi == 0:
        head = quad(f, 0, L, limit=400)[0]
    else:
        head = quad(f, 0, L, weight="cos", wvar=xi, limit=400)[0]
    tail = _inv_sq_cos_tail(L, xi) - 0.5 * _inv_sq_cos_tail(L, 1 + xi) - 0.5 * _inv_sq_cos_tail(L, 1 - xi)
    assert 2 * (head + tail) == pytest.approx(fourier(MU, xi), abs=1e-6)


def test_mass_and_cdf():
    assert mu_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert mu_cdf(1e8) == pytest.approx(1.0, abs=1e-8)
    A = 7.0
    head = quad(lambda x: density(MU, x), 0, A, limit=200)[0]
    assert 0.5 - head == pytest.approx(mu_tail_mass(A), abs=1e-12)
    assert mu_cdf(A) - mu_cdf(-A) == pytest.approx(2 * head, abs=1e-12)


def test_invalid_kernels():
    with pytest.raises(InvalidSpec):
        WeightKernel.mu2gamma(0)
    with pytest.raises(InvalidSpec):
        WeightKernel.conv_K(8, 0.1)
    with pytest.raises(InvalidSpec):
        WeightKernel("cauchy")


def test_transforms_nonnegative():
    xi = np.linspace(-40, 40, 4001)
    for k in (MU, WeightKernel.mu2gamma(3.0), WeightKernel.gauss_phi(), WeightKernel.conv_K(1000, 0.5)):
        assert np.all(fourier(k, xi) >= 0)


def test_conv_K_lower_bound():
    N, eps = 1000, 0.4
    k = WeightKernel.conv_K(N, eps)
    rN = N ** (1 + eps / 8)
    j = np.arange(1, int(rN) + 1)
    worst = float(fourier(k, math.log(j[-1] * j[-1])))
    assert worst >= conv_K_lower_bound(N, eps, rN) - 1e-12 > 0


def test_sampler_deterministic():
    assert np.array_equal(sample_mu(5, 1000), sample_mu(5, 1000))
    assert not np.array_equal(sample_mu(5, 1000), sample_mu(6, 1000))
    with pytest.raises(InvalidSpec):
        sample_mu(0, 0)


@pytest.mark.slow
def test_sampler_mass_and_symmetry():
    x = MuSampler(seed=2024).sample(10 ** 6)
    n = x.size
    for a in (1.0, 5.0, 20.0):
        ref = 2 * quad(lambda t: density(MU, t), 0, a, limit=200)[0]
        se = math.sqrt(ref * (1 - ref) / n)
        assert abs(np.mean(np.abs(x) <= a) - ref) < 3 * se
    assert abs(np.mean(np.sign(x))) < 3 / math.sqrt(n)
    # tails are present beyond the tabulated split
    assert np.any(np.abs(x) > 200)
