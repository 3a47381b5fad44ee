import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from betasource.charpoly import ensemble_average_quad
from betasource.combinatorics import DomainError
from betasource.ensembles import (
    EnsembleSpec,
    Family,
    SDEConfig,
    density,
    density_batch,
    gaussian_norm,
    laguerre_norm,
    log_gaussian_norm,
    matrix_model_batch,
    sample_many,
    sample_sde,
)


def test_gaussian_norm_examples():
    for beta in (0.5, 1, 2, 4):
        assert gaussian_norm(beta, 1) == pytest.approx(math.sqrt(2 * math.pi))
    assert gaussian_norm(2, 2) == pytest.approx(4 * math.pi)
    assert gaussian_norm(1, 2) == pytest.approx(4 * math.sqrt(math.pi))
    assert math.isfinite(log_gaussian_norm(2, 400))


def test_laguerre_norm_examples():
    assert laguerre_norm(2.5, 1.3, 1) == pytest.approx(special.gamma(2.5))
    assert laguerre_norm(1, 2, 1) == pytest.approx(1.0)
    a = 1.7
    assert laguerre_norm(a, 2, 2) == pytest.approx(2 * special.gamma(a) * special.gamma(a + 1))
    with pytest.raises(DomainError):
        laguerre_norm(0, 2, 1)


def test_spec_validation():
    with pytest.raises(DomainError):
        EnsembleSpec("gaussian", 2, 2, 1.0, (1.0,))
    with pytest.raises(DomainError):
        EnsembleSpec("laguerre", 2, 1, 1.0, (-1.0,), a=1.0)
    with pytest.raises(DomainError):
        EnsembleSpec("laguerre", 2, 2, 1.0, a=1.0, p_dim=3)
    assert EnsembleSpec("laguerre", 2, 2, 1.0, p_dim=3).a == 2.0


def test_density_reductions():
    spec = EnsembleSpec("gaussian", 2, 1, 0.7, (0.4,))
    assert density(spec, [1.1]) == pytest.approx(stats.norm(0.4, math.sqrt(0.7)).pdf(1.1), rel=1e-12)
    spec = EnsembleSpec("gaussian", 1, 2, 1.0)
    x = np.array([-0.3, 0.9])
    expected = math.exp(-np.sum(x**2) / 2) * abs(x[1] - x[0]) / gaussian_norm(1, 2)
    assert density(spec, x) == pytest.approx(expected, rel=1e-12)
    spec = EnsembleSpec("laguerre", 2, 1, 1.0, a=2.5)
    assert density(spec, [0.8]) == pytest.approx(0.8**1.5 * math.exp(-0.8) / special.gamma(2.5), rel=1e-12)
    with pytest.raises(DomainError):
        density(spec, [0.0])


@pytest.mark.parametrize("family", ["gaussian", "laguerre"])
@pytest.mark.parametrize("beta", [1, 2, 4])
def test_density_normalises(family, beta):
    for N, f in ((1, (0.6,)), (2, (0.9, 0.2))):
        val, _ = ensemble_average_quad(Family(family), beta, N, 0.8, f, lambda xs: np.ones(len(xs)),
                                       a=1.5 if family == "laguerre" else None, rtol=1e-8)
        assert abs(val - 1) < 1e-4


def test_matrix_model_moments():
    spec = EnsembleSpec("gaussian", 2, 2, 1.0)
    xs = sample_many(spec, 100_000, seed=4)
    tr2 = np.sum(xs**2, axis=1)
    assert abs(tr2.mean() - 4) < 3 * tr2.std() / math.sqrt(len(tr2))
    spec = EnsembleSpec("laguerre", 2, 1, 1.0, (0.0,), p_dim=1)
    x = sample_many(spec, 20_000, seed=2)[:, 0]
    assert stats.kstest(x, "expon").pvalue > 1e-3
    spec = EnsembleSpec("gaussian", 1, 1, 0.5, (0.7,))
    x = sample_many(spec, 20_000, seed=2)[:, 0]
    assert stats.kstest(x, "norm", args=(0.7, math.sqrt(0.5))).pvalue > 1e-3


def test_matrix_model_rejects_beta4():
    with pytest.raises(DomainError):
        matrix_model_batch(EnsembleSpec("gaussian", 4, 2, 1.0), np.random.default_rng(0), 2)


def test_sde_trace_laws():
    f = (0.5, -0.3, 1.0)
    spec = EnsembleSpec("gaussian", 1.5, 3, 0.4, f)
    xs = sample_many(spec, 10_000, seed=7, sampler="sde", cfg=SDEConfig(dt=2e-3))
    tr = xs.sum(axis=1)
    se = tr.std() / math.sqrt(len(tr))
    assert abs(tr.mean() - sum(f)) < 3 * se
    assert tr.var() == pytest.approx(3 * 0.4, rel=0.05)
    assert np.all(np.diff(xs, axis=1) >= 0)

    spec = EnsembleSpec("laguerre", 2, 2, 0.5, (0.3, 0.8), a=1.5)
    xs = sample_many(spec, 10_000, seed=8, sampler="sde", cfg=SDEConfig(dt=1e-3))
    tr = xs.sum(axis=1)
    # at density time t the Laguerre trace mean is sum f + N a t + beta N (N-1) t / 2
    expected = 1.1 + 2 * 1.5 * 0.5 + 2 * 2 * 1 * 0.5 / 2
    assert abs(tr.mean() - expected) < 3 * tr.std() / math.sqrt(len(tr))
    assert np.all(xs > 0)


def test_sde_matches_matrix_model():
    spec = EnsembleSpec("gaussian", 2, 2, 1.0, (0.5, -0.5))
    a = sample_many(spec, 10_000, seed=1)[:, -1]
    b = sample_many(spec, 10_000, seed=2, sampler="sde", cfg=SDEConfig(dt=2e-3))[:, -1]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_sampler_agrees_with_density_marginal():
    spec = EnsembleSpec("gaussian", 2, 2, 0.5, (1.0, -1.0))
    top = sample_many(spec, 20_000, seed=11)[:, -1]
    # top-eigenvalue CDF from the density on a grid (trapezoid in both directions)
    u = np.linspace(-5.0, 6.0, 701)
    X1, X2 = np.meshgrid(u, u, indexing="ij")
    pts = np.stack([X1.ravel(), X2.ravel()], axis=1)
    p = density_batch(spec, pts).reshape(X1.shape)
    p = np.where(X1 <= X2, 2 * p, 0.0)
    marginal = integrate.trapezoid(p, u, axis=0)
    cdf = np.concatenate([[0.0], np.cumsum((marginal[1:] + marginal[:-1]) / 2 * np.diff(u))])
    assert cdf[-1] == pytest.approx(1.0, abs=1e-3)
    edges = np.quantile(top, np.linspace(0, 1, 11))
    edges[0], edges[-1] = u[0], u[-1]
    probs = np.diff(np.interp(edges, u, cdf / cdf[-1]))
    counts = np.histogram(top, edges)[0]
    chi2 = np.sum((counts - len(top) * probs) ** 2 / (len(top) * probs))
    assert stats.chi2.sf(chi2, len(counts) - 1) > 1e-3


def test_single_path_sde():
    spec = EnsembleSpec("gaussian", 2, 3, 0.2, (0.0, 0.0, 0.0))
    sample = sample_sde(spec, SDEConfig(dt=1e-3, seed=3))
    assert sample.values.shape == (3,)
    assert np.all(np.diff(sample.values) > 0)


def test_sampling_independent_of_workers():
    spec = EnsembleSpec("gaussian", 2, 2, 1.0, (0.3, 0.0))
    a = sample_many(spec, 9000, seed=5, workers=1)
    b = sample_many(spec, 9000, seed=5, workers=3)
    assert np.array_equal(a, b)
