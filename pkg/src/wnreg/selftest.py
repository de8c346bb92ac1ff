"""Deterministic invariant checks run by ``wnreg selftest``.

Each check is cheap, seedless where possible, and returns ``(ok, detail)``.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import bargmann as bg
from . import chaos as ch
from . import heat as ht
from . import transport as tr

Check = Callable[[], tuple[bool, str]]


def _close(a: float, b: float, rtol: float = 1e-12, atol: float = 0.0) -> bool:
    return math.isclose(a, b, rel_tol=rtol, abs_tol=atol)


def chaos_generating_function() -> tuple[bool, str]:
    x, alpha_sq, s = 0.7, 1.3, 0.4
    series = sum(ch.hermite(n, alpha_sq, x) * s ** n / math.factorial(n) for n in range(41))
    ref = math.exp(-0.5 * alpha_sq * s * s + s * x)
    return _close(series, ref, 1e-12), f"series={series!r} closed={ref!r}"


def chaos_roundtrip() -> tuple[bool, str]:
    F = ch.random_chaos(np.random.default_rng(11), 3, 4)
    G = ch.loads(ch.dumps(F))
    return G == F, "text round-trip"


def chaos_wick_multiplicative() -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    F, G = ch.random_chaos(rng, 2, 3), ch.random_chaos(rng, 2, 2)
    phi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    lhs = ch.s_transform(ch.wick_product(F, G), phi)
    rhs = ch.s_transform(F, phi) * ch.s_transform(G, phi)
    return abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs)), f"|diff|={abs(lhs - rhs):.3e}"


def chaos_isometry_s0() -> tuple[bool, str]:
    F = ch.random_chaos(np.random.default_rng(2), 3, 3)
    a, b = ch.l2_norm_sq(F), ch.gks_norm_sq(F, ch.DiagonalOperator.uniform(2.0), 0.0)
    return _close(a, b, 1e-12), f"L2={a!r} G_0={b!r}"


def bargmann_exact_curve_monotone() -> tuple[bool, str]:
    F = ch.random_chaos(np.random.default_rng(3), 4, 3)
    curve = bg.norm_curve(F, ch.DiagonalOperator.uniform(2.0), 1.0, range(1, 7), None)
    vals = [e.exact for e in curve]
    return all(b >= a for a, b in zip(vals, vals[1:])), f"values={vals}"


def bargmann_wick_exponential() -> tuple[bool, str]:
    F = ch.wick_exponential([1.0], 30)
    v = bg.exact_projected_norm(F, ch.DiagonalOperator.uniform(math.sqrt(2.0)), 1.0, 1)
    return _close(v, math.e ** 2, 1e-12), f"value={v!r}"


def transport_table() -> tuple[bool, str]:
    want = {0.5: ("L2", 1.0), 1.0: ("DonskerDelta", 0.0), 2.0: ("RegularDistribution", -1.0)}
    got = {}
    for sq, (cls, thr) in want.items():
        v = tr.classify_regularity(tr.SteCoefficients.constant(1.0, sq), 1.0)
        got[sq] = (v.regularity, v.s_threshold)
    return got == want, f"got={got}"


def transport_donsker() -> tuple[bool, str]:
    v = tr.donsker_norm(1.0, 0.0, -1.0)
    ref = (2.0 / math.sqrt(3.0)) / (2.0 * math.pi)
    try:
        tr.donsker_norm(1.0, 0.0, 0.0)
        flagged = False
    except tr.DivergentNorm:
        flagged = True
    return abs(v - ref) <= 1e-12 and flagged, f"value={v!r} divergent_at_0={flagged}"


def transport_divergence_rule() -> tuple[bool, str]:
    c = tr.SteCoefficients.constant(1.0, 1.0)
    bad = []
    for s in (-2.0, -1.0, -0.5, 0.0, 0.5):
        try:
            tr.ste_norm(c, 1.0, 0.0, s)
            raised = False
        except tr.DivergentNorm:
            raised = True
        if raised != (2.0 ** s >= 1.0):
            bad.append(s)
    return not bad, f"mismatched s={bad}"


def heat_exact_case() -> tuple[bool, str]:
    cov = ht.NoiseCovariance(ht.ConstantTemporal(1.0), ht.ConstantSpatial(1.0))
    t, lam = 0.8, 0.6
    r = ht.fk_bounds(cov, ht.ConstantInitial(1.0), t, 0.0, lam, 256, 16, seed=1)
    sk, st = r["skorokhod"], r["stratonovich"]
    ok = (_close(sk.mean, math.exp(4 * lam * lam * t * t), 1e-12)
          and _close(st.mean, math.exp(t * t + 4 * lam * lam * t * t), 1e-12)
          and sk.stderr == 0.0 and st.stderr == 0.0)
    return ok, f"skorokhod={sk.mean!r} stratonovich={st.mean!r}"


def heat_power_energy() -> tuple[bool, str]:
    g = ht.PowerTemporal(1.0, 0.5)
    cov = ht.NoiseCovariance(g, ht.ConstantSpatial(1.0))
    X, Y = ht.sample_bm_pair(1, 1.0, 40, 0.0, np.random.default_rng(0))
    e = ht.cross_energy(cov, X, Y, 1.0)
    return _close(e, g.double_integral(1.0), 1e-10), f"energy={e!r}"


def heat_symmetry() -> tuple[bool, str]:
    cov = ht.NoiseCovariance(ht.PowerTemporal(2.0, 0.3), ht.GaussianSpatial(1.5, 0.4), d=2)
    X, Y = ht.sample_bm_pair(2, 1.0, 30, [0.1, -0.2], np.random.default_rng(4))
    a, b = ht.cross_energy(cov, X, Y, 1.0), ht.cross_energy(cov, Y, X, 1.0)
    return a == b, f"{a!r} vs {b!r}"


CHECKS: dict[str, tuple[str, Check]] = {
    "hermite_generating_function": ("chaos", chaos_generating_function),
    "chaos_text_roundtrip": ("chaos", chaos_roundtrip),
    "wick_product_multiplicative": ("chaos", chaos_wick_multiplicative),
    "isometry_at_s0": ("chaos", chaos_isometry_s0),
    "exact_curve_monotone": ("bargmann", bargmann_exact_curve_monotone),
    "wick_exponential_norm": ("bargmann", bargmann_wick_exponential),
    "regularity_table": ("transport", transport_table),
    "donsker_delta": ("transport", transport_donsker),
    "divergence_rule": ("transport", transport_divergence_rule),
    "fk_exact_case": ("heat", heat_exact_case),
    "power_law_energy": ("heat", heat_power_energy),
    "cross_energy_symmetry": ("heat", heat_symmetry),
}


def run_all() -> list[tuple[str, str, bool, str]]:
    """``(name, module, ok, detail)`` for every check; exceptions count as failures."""
    out = []
    for name, (module, fn) in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, module, bool(ok), detail))
    return out
