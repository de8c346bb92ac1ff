from __future__ import annotations

import io
import math

import numpy as np
import pytest

from wnreg import bargmann as bg
from wnreg import chaos as ch
from wnreg import transport as tr
from wnreg._mc import Moments, chunk_sizes, map_chunks, reduce_moments

ID = ch.DiagonalOperator.identity()
K2 = ch.DiagonalOperator.uniform(math.sqrt(2.0))


# ---------------------------------------------------------------- plumbing

def test_moments_merge_matches_direct():
    v = np.random.default_rng(0).standard_normal(1001) ** 2
    parts = [Moments.from_values(v[a:a + 97]) for a in range(0, v.size, 97)]
    m = reduce_moments(parts)
    assert m.count == v.size
    assert m.mean == pytest.approx(v.mean(), rel=1e-13)
    assert m.stderr == pytest.approx(v.std(ddof=1) / math.sqrt(v.size), rel=1e-10)


def test_moments_constant_and_nonfinite():
    m = Moments.from_values([2.0, 2.0, 2.0])
    assert (m.mean, m.stderr) == (2.0, 0.0)
    m = Moments.from_values([1.0, np.inf, np.nan, 3.0])
    assert (m.count, m.nonfinite, m.mean) == (2, 2, 2.0)


def test_chunking():
    assert chunk_sizes(10, 4) == [4, 4, 2]
    with pytest.raises(ValueError):
        chunk_sizes(0)
    assert map_chunks(lambda j, n: (j, n), 10, 4, workers=3) == [(0, 4), (1, 4), (2, 2)]


# ---------------------------------------------------------------- sampler

def test_sampler_moments():
    z = bg.sample_complex_gaussian(bg.ComplexGaussianSampler(2, seed=3), 100_000)
    assert z.shape == (100_000, 2)
    assert np.mean(np.abs(z[:, 0]) ** 2) == pytest.approx(1.0, abs=0.01)
    m2 = np.mean(z[:, 0] ** 2)
    assert abs(m2.real) < 0.01 and abs(m2.imag) < 0.01


def test_sampler_deterministic_and_nested():
    a = bg.ComplexGaussianSampler(3, seed=9, stream_id=2).sample(50)
    b = bg.ComplexGaussianSampler(3, seed=9, stream_id=2).sample(50)
    c = bg.ComplexGaussianSampler(5, seed=9, stream_id=2).sample(50)
    assert np.array_equal(a, b)
    assert np.array_equal(a, c[:, :3])
    d = bg.ComplexGaussianSampler(3, seed=9, stream_id=3).sample(50)
    assert not np.array_equal(a, d)


def test_sampler_validation():
    with pytest.raises(ValueError):
        bg.ComplexGaussianSampler(0)
    with pytest.raises(ValueError):
        bg.ComplexGaussianSampler(1).sample(0)


# ---------------------------------------------------------------- Monte Carlo estimates

def test_constant_functional():
    U = bg.UFunctional(lambda z: np.full(z.shape[0], 3.0 - 4.0j))
    est = bg.mc_projected_norm(U, ID, 0.0, 2, 5000)
    assert est.mean == 25.0 and est.stderr == 0.0


def test_first_coordinate():
    U = bg.UFunctional(lambda z: z[:, 0])
    est = bg.mc_projected_norm(U, ID, 0.0, 1, 100_000, bg.ComplexGaussianSampler(1, 4))
    assert abs(est.mean - 1.0) <= 4 * est.stderr


def test_wick_exponential_oracle():
    E = ch.wick_exponential([1.0], 30)
    assert bg.exact_projected_norm(E, K2, 1.0, 1) == pytest.approx(math.e ** 2, rel=1e-13)
    U = bg.chaos_u_functional(E)
    est = bg.mc_projected_norm(U, K2, 1.0, 1, 200_000, bg.ComplexGaussianSampler(1, 5))
    assert abs(est.mean - math.e ** 2) <= 4 * est.stderr
    assert est.exact == pytest.approx(math.e ** 2, rel=1e-13)


def test_nonfinite_values_are_counted():
    U = bg.UFunctional(lambda z: np.where(z[:, 0].real > 0, np.inf, 1.0))
    est = bg.mc_projected_norm(U, ID, 0.0, 1, 2000)
    assert est.nonfinite > 0 and not est.reliable
    assert est.value(prefer_exact=False) == math.inf


def test_rank_limit_of_functional():
    U = bg.UFunctional(lambda z: z[:, 0], max_rank=2)
    with pytest.raises(ValueError):
        bg.mc_projected_norm(U, ID, 0.0, 3, 10)


def test_scaling_consistency_exact():
    F = ch.random_chaos(np.random.default_rng(1), 3, 3)
    lam, s = 2.0, 0.7
    scale = lam ** s
    U = bg.chaos_u_functional(F)
    V = bg.UFunctional(lambda z: ch.s_transform(F, scale * z))
    smp = bg.ComplexGaussianSampler(3, seed=6)
    a = bg.mc_projected_norm(U, ch.DiagonalOperator.uniform(lam), s, 3, 4000, smp)
    b = bg.mc_projected_norm(V, ID, 0.0, 3, 4000, smp)
    assert a.mean == b.mean and a.stderr == b.stderr


def test_worker_independence():
    F = ch.random_chaos(np.random.default_rng(2), 2, 3)
    U = bg.chaos_u_functional(F)
    smp = bg.ComplexGaussianSampler(2, seed=7)
    a = bg.mc_projected_norm(U, K2, 1.0, 2, 30_000, smp, chunk=4096, workers=1)
    b = bg.mc_projected_norm(U, K2, 1.0, 2, 30_000, smp, chunk=4096, workers=4)
    assert (a.mean, a.stderr) == (b.mean, b.stderr)


def test_antithetic_unbiased():
    F = ch.random_chaos(np.random.default_rng(3), 2, 2)
    est = bg.mc_projected_norm(bg.chaos_u_functional(F), K2, 0.5, 2, 50_000,
                               bg.ComplexGaussianSampler(2, 8), antithetic=True)
    assert abs(est.mean - est.exact) <= 4 * est.stderr


# ---------------------------------------------------------------- exact oracle and curves

def test_exact_full_rank_equals_gks():
    F = ch.random_chaos(np.random.default_rng(4), 4, 3)
    K = ch.DiagonalOperator((1.0, 2.0, 1.5, 3.0))
    assert bg.exact_projected_norm(F, K, 0.8, 4) == pytest.approx(ch.gks_norm_sq(F, K, 0.8), rel=1e-12)
    assert bg.exact_projected_norm(F, K, 0.8, 10) == pytest.approx(ch.gks_norm_sq(F, K, 0.8), rel=1e-12)


def test_exact_orthogonal_projection():
    F = ch.first_chaos([0.0, 1.0])
    assert bg.exact_projected_norm(F, K2, 1.0, 1) == 0.0


def test_exact_curve_monotone_and_limit():
    F = ch.random_chaos(np.random.default_rng(5), 4, 4)
    curve = bg.norm_curve(F, K2, 1.0, [1, 2, 3, 4], None)
    vals = [e.exact for e in curve]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(ch.gks_norm_sq(F, K2, 1.0), rel=1e-12)


def test_curve_constant_beyond_support():
    F = ch.ChaosElement.from_kernels(
        [ch.SymmetricKernel(1, 2, {(1, 0): 1.0, (0, 1): 2.0})], dim=4)
    vals = [e.exact for e in bg.norm_curve(F, K2, 0.5, [2, 3, 4, 6], None)]
    assert vals == [vals[0]] * 4


def test_curve_validation():
    F = ch.first_chaos([1.0])
    with pytest.raises(ValueError):
        bg.norm_curve(F, K2, 1.0, [2, 2], None)
    U = bg.UFunctional(lambda z: z[:, 0])
    with pytest.raises(ValueError):
        bg.norm_curve(U, K2, 1.0, [1, 2], None)


def test_mc_curve_is_coupled_across_ranks():
    F = ch.first_chaos([1.0, 0.0, 0.0])
    curve = bg.norm_curve(F, K2, 1.0, [1, 2, 3], 5000, seed=3)
    # extra coordinates do not enter U, so coupled samples give identical estimates
    assert curve[0].mean == curve[1].mean == curve[2].mean


# ---------------------------------------------------------------- classification

def _exact(values):
    return [bg.NormEstimate(v, 0.0, 0, i + 1, "test", 0, v) for i, v in enumerate(values)]


def test_classify_constant_bounded():
    assert bg.classify_membership(_exact([2.0] * 5)).status == "bounded"


def test_classify_growth_diverging():
    assert bg.classify_membership(_exact([1.0, 2.0, 4.0, 8.0])).status == "diverging"
    assert bg.classify_membership(_exact([1.0, 2.0, math.inf])).status == "diverging"


def test_classify_mixed_inconclusive():
    assert bg.classify_membership(_exact([1.0, 2.0, 2.01, 3.0])).status == "inconclusive"


def test_classify_noise_blocks_decision():
    noisy = [bg.NormEstimate(v, 0.5, 100, i + 1, "t") for i, v in enumerate([1.0, 1.0, 1.0, 1.0])]
    assert bg.classify_membership(noisy).status == "inconclusive"


def test_classify_needs_three_ranks():
    with pytest.raises(ValueError):
        bg.classify_membership(_exact([1.0, 1.0]))


def _donsker_like():
    return tr.SteCoefficients.constant(1.0, 1.0)


def test_donsker_curve_diverges_at_s0():
    c = _donsker_like()
    ranks = [25, 50, 100, 200, 400, 800]
    U = tr.ste_u_functional(c, 1.0, 0.0, max_rank=ranks[-1])
    verdict = bg.classify_membership(bg.norm_curve(U, tr.STE_OPERATOR, 0.0, ranks, None))
    assert verdict.status == "diverging"
    assert "heuristic" in str(verdict)


def test_donsker_curve_bounded_at_s_minus1():
    c = _donsker_like()
    ranks = [100, 200, 400, 600]
    U = tr.ste_u_functional(c, 1.0, 0.0, max_rank=ranks[-1])
    curve = bg.norm_curve(U, tr.STE_OPERATOR, -1.0, ranks, None)
    verdict = bg.classify_membership(curve)
    assert verdict.status == "bounded"
    closed = tr.ste_norm(c, 1.0, 0.0, -1.0)
    assert verdict.limit.exact == pytest.approx(closed, rel=1e-3)


def test_curve_csv_columns():
    F = ch.first_chaos([1.0, 1.0])
    curve = bg.norm_curve(F, K2, 1.0, [1, 2, 3], 100, seed=4)
    buf = io.StringIO()
    bg.write_curve_csv(buf, curve, seed=4, verdict=bg.classify_membership(curve))
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# seed=4 policy=")
    assert lines[2] == "rank,samples,mean,stderr,nonfinite_count,exact,status"
    assert len(lines) == 6
