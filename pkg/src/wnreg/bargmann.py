"""
Bargmann-Segal norm estimation over nested projections.

An element ``Phi`` lies in ``G_{K,s}`` exactly when the integrals

    I_l = int |U(K^s P_l eta)|^2 nu(d eta)

stay bounded along the nested projections ``P_l`` onto ``e_1..e_l``, where
``U = S Phi`` and ``nu`` is the complex Gaussian measure whose coordinates
have independent ``N(0, 1/2)`` real and imaginary parts.  The sequence is
non-decreasing and its limit is ``||Phi||^2_{K,s}``.

This module estimates ``I_l`` by Monte Carlo for any vectorised
U-functional, computes it exactly for chaos elements, and offers a
(heuristic, clearly labelled) bounded/diverging classifier for curves.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
import csv
import math
from typing import Callable, Sequence, TextIO

import numpy as np

from ._mc import DEFAULT_CHUNK, Moments, map_chunks, reduce_moments, stream_rng
from .chaos import ChaosElement, DiagonalOperator, _factorial_multi, s_transform

__all__ = [
    "ComplexGaussianSampler",
    "UFunctional",
    "NormEstimate",
    "MembershipPolicy",
    "MembershipVerdict",
    "sample_complex_gaussian",
    "chaos_u_functional",
    "mc_projected_norm",
    "exact_projected_norm",
    "norm_curve",
    "classify_membership",
    "write_curve_csv",
]


@dataclass(frozen=True)
class ComplexGaussianSampler:
    """Draws ``z`` in ``C^dim`` with iid coordinates, ``Re z_k, Im z_k ~ N(0, 1/2)``.

    Coordinate ``k`` of chunk ``j`` comes from the stream ``(seed, stream_id, j, k)``.
    Raising ``dim`` therefore leaves the leading coordinates untouched, which
    couples the estimates along a nested norm curve.
    """

    dim: int
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("sampler dimension must be >= 1")

    def draw_chunk(self, chunk: int, count: int) -> np.ndarray:
        out = np.empty((count, self.dim), dtype=complex)
        scale = math.sqrt(0.5)
        for k in range(self.dim):
            g = stream_rng(self.seed, self.stream_id, chunk, k).standard_normal((2, count))
            out[:, k] = scale * g[0] + 1j * (scale * g[1])
        return out

    def sample(self, count: int) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be >= 1")
        return self.draw_chunk(0, count)


def sample_complex_gaussian(sampler: ComplexGaussianSampler, count: int) -> np.ndarray:
    """``count`` iid draws from ``nu`` projected to ``sampler.dim`` coordinates, shape ``(count, dim)``."""
    return sampler.sample(count)


@dataclass(frozen=True)
class UFunctional:
    """A map from projected complex coordinates to ``C``.

    ``func`` takes an array of shape ``(batch, l)`` and returns ``(batch,)``
    complex values.  ``max_rank`` bounds the supported ``l`` (``None`` for
    any).  ``growth`` is an optional ``(A, B, p)`` witness of exponential
    order 2, kept as metadata only.  ``projected_exact(K, s, l)``, when
    supplied, returns the exact value of the projected integral.
    """

    func: Callable[[np.ndarray], np.ndarray]
    max_rank: int | None = None
    growth: tuple[float, float, int] | None = None
    projected_exact: Callable[[DiagonalOperator, float, int], float] | None = None
    name: str = "U"

    def __call__(self, z) -> np.ndarray:
        return self.func(np.atleast_2d(np.asarray(z, dtype=complex)))


def chaos_u_functional(F: ChaosElement) -> UFunctional:
    """``U = S F``; ranks beyond ``F.dim`` see zero-padded coefficients."""
    return UFunctional(
        func=lambda z: s_transform(F, z),
        projected_exact=lambda K, s, l: exact_projected_norm(F, K, s, l),
        name=f"S(chaos dim={F.dim}, N={F.max_order})",
    )


@dataclass(frozen=True)
class NormEstimate:
    """Monte Carlo estimate of ``I_l`` (and the exact value when known)."""

    mean: float
    stderr: float
    samples: int
    rank: int
    scale: str
    nonfinite: int = 0
    exact: float | None = None

    @property
    def reliable(self) -> bool:
        return self.nonfinite == 0

    def value(self, prefer_exact: bool = True) -> float:
        if prefer_exact and self.exact is not None:
            return self.exact
        return self.mean if self.reliable else math.inf


def exact_projected_norm(F: ChaosElement, K: DiagonalOperator, s: float, rank: int) -> float:
    """``sum_n n! ||P_l^{(x) n} (K^s)^{(x) n} f^(n)||^2`` for the first ``rank`` basis vectors."""
    if rank < 0:
        raise ValueError("rank must be non-negative")
    l = min(rank, F.dim)
    weights = K.power(2.0 * s, l) if l else np.zeros(0)
    total = 0.0
    for k in F.kernels:
        for alpha, c in k.coeffs.items():
            if any(alpha[l:]):
                continue
            w = 1.0
            for lam2s, a in zip(weights, alpha[:l]):
                if a:
                    w *= lam2s ** a
            total += abs(c) ** 2 * _factorial_multi(alpha) * w
    return total


def mc_projected_norm(U: UFunctional, K: DiagonalOperator, s: float, rank: int, n_samples: int,
                      sampler: ComplexGaussianSampler | None = None, *, antithetic: bool = False,
                      chunk: int = DEFAULT_CHUNK, workers: int = 1) -> NormEstimate:
    """Monte Carlo estimate of ``int |U(K^s P_l eta)|^2 nu(d eta)`` with ``l = rank``.

    ``K`` is diagonal in the projection basis, so ``K^s`` scales coordinate
    ``k`` by ``lambda_k^s``.  With ``antithetic`` each draw ``z`` is paired with
    ``-z`` and the pair average counts as one sample.  Non-finite values are
    counted in ``nonfinite`` and excluded from the mean, which marks the
    estimate unreliable.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if U.max_rank is not None and rank > U.max_rank:
        raise ValueError(f"U supports ranks up to {U.max_rank}, got {rank}")
    if sampler is None:
        sampler = ComplexGaussianSampler(rank)
    elif sampler.dim != rank:
        sampler = ComplexGaussianSampler(rank, sampler.seed, sampler.stream_id)
    scale = K.power(s, rank)

    def run(j: int, count: int) -> Moments:
        z = sampler.draw_chunk(j, count) * scale
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.abs(U.func(z)) ** 2
            if antithetic:
                v = 0.5 * (v + np.abs(U.func(-z)) ** 2)
        return Moments.from_values(v)

    mom = reduce_moments(map_chunks(run, n_samples, chunk, workers))
    exact = U.projected_exact(K, s, rank) if U.projected_exact is not None else None
    return NormEstimate(mom.mean, mom.stderr, n_samples, rank, f"K^s, K={K.describe()}, s={s:g}",
                        mom.nonfinite, exact)


def norm_curve(target: ChaosElement | UFunctional, K: DiagonalOperator, s: float,
               ranks: Sequence[int], n_samples: int | None, seed: int = 0, stream_id: int = 0, *,
               antithetic: bool = False, chunk: int = DEFAULT_CHUNK, workers: int = 1) -> list[NormEstimate]:
    """Estimates of ``I_l`` for each ``l`` in ``ranks`` (strictly increasing).

    All ranks share one sampler stream, so rank ``l`` reuses the first
    coordinates drawn for smaller ranks.  With ``n_samples=None`` only exact
    values are produced (``samples=0``, ``mean`` set to the exact value).
    """
    ranks = [int(r) for r in ranks]
    if any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ValueError("ranks must be strictly increasing")
    U = chaos_u_functional(target) if isinstance(target, ChaosElement) else target
    out = []
    for l in ranks:
        if n_samples is None:
            if U.projected_exact is None:
                raise ValueError("exact-only curve requested for a functional without an exact oracle")
            ex = U.projected_exact(K, s, l)
            out.append(NormEstimate(ex, 0.0, 0, l, f"K^s, K={K.describe()}, s={s:g}",
                                    0 if math.isfinite(ex) else 1, ex))
            continue
        sampler = ComplexGaussianSampler(l, seed, stream_id)
        out.append(mc_projected_norm(U, K, s, l, n_samples, sampler, antithetic=antithetic,
                                     chunk=chunk, workers=workers))
    return out


# --------------------------------------------------------------------------- classification

@dataclass(frozen=True)
class MembershipPolicy:
    """Tuning of the bounded/diverging heuristic.

    ``window`` consecutive rank steps are inspected; a step is "growing" when
    its relative increment exceeds ``rel_growth`` by more than ``z`` standard
    errors and "settled" when it stays below ``rel_growth`` by that margin.
    """

    window: int = 3
    rel_growth: float = 0.10
    z: float = 4.0
    prefer_exact: bool = True


@dataclass(frozen=True)
class MembershipVerdict:
    status: str                      # "bounded" | "diverging" | "inconclusive"
    limit: NormEstimate | None
    increments: tuple[float, ...]
    heuristic: bool = True

    def __str__(self) -> str:
        tail = f", last value {self.limit.value():.6g}" if self.limit is not None else ""
        return f"{self.status} (heuristic verdict{tail})"


def classify_membership(curve: Sequence[NormEstimate], policy: MembershipPolicy | None = None) -> MembershipVerdict:
    """Label a norm curve bounded, diverging or inconclusive.

    This is a finite-sample heuristic: membership is an asymptotic property
    and no finite curve decides it.  Exact values are used where present
    (``policy.prefer_exact``), otherwise the Monte Carlo means and errors.
    """
    policy = policy or MembershipPolicy()
    if len(curve) < 3:
        raise ValueError("classification needs at least 3 ranks")
    vals, errs = [], []
    for est in curve:
        use_exact = policy.prefer_exact and est.exact is not None
        vals.append(est.value(policy.prefer_exact))
        errs.append(0.0 if use_exact else est.stderr)
    if not all(math.isfinite(v) for v in vals):
        return MembershipVerdict("diverging", curve[-1], ())
    steps = min(policy.window, len(vals) - 1)
    incs, growing, settled = [], [], []
    for i in range(len(vals) - steps - 1, len(vals) - 1):
        base = max(abs(vals[i]), np.finfo(float).tiny)
        diff = vals[i + 1] - vals[i]
        noise = policy.z * math.hypot(errs[i], errs[i + 1])
        incs.append(diff / base)
        growing.append(diff - noise > policy.rel_growth * base)
        settled.append(diff + noise < policy.rel_growth * base)
    if all(growing):
        status = "diverging"
    elif all(settled):
        status = "bounded"
    else:
        status = "inconclusive"
    return MembershipVerdict(status, curve[-1], tuple(incs))


def write_curve_csv(out: TextIO, curve: Sequence[NormEstimate], *, seed: int,
                    policy: MembershipPolicy | None = None, verdict: MembershipVerdict | None = None) -> None:
    """CSV with columns ``rank, samples, mean, stderr, nonfinite_count, exact, status``.

    A leading comment line echoes the seed and policy.
    """
    policy = policy or MembershipPolicy()
    out.write(f"# seed={seed} policy={asdict(policy)}\n")
    if verdict is not None:
        out.write(f"# verdict={verdict.status} (heuristic)\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["rank", "samples", "mean", "stderr", "nonfinite_count", "exact", "status"])
    for est in curve:
        status = "ok" if est.reliable else "nonfinite"
        if est.exact is not None and not math.isfinite(est.exact):
            status = "diverging"
        w.writerow([est.rank, est.samples, repr(float(est.mean)), repr(float(est.stderr)),
                    est.nonfinite, "" if est.exact is None else repr(float(est.exact)), status])
