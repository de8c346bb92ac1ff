"""
Regularity of the singular stochastic transport equation.

The solution ``u_{t,x}`` of the transport equation with viscosity ``nu(t)`` and
noise amplitude ``sigma(t)`` is known through its S-transform

    S u_{t,x}(phi) = (2 pi theta)^{-1/2} exp(-(x - <1_[0,t] sigma, phi>)^2 / (2 theta)),

with ``theta(t) = int_0^t nu``.  Everything about its regularity is governed by
``kappa(t) = varsigma(t) / theta(t)``, ``varsigma(t) = int_0^t sigma^2``:
``u_{t,x}`` lies in ``G_s`` (``K = sqrt(2) Id``) whenever ``2^s kappa(t) < 1``.

Coefficients come from a small preset catalog (constant, power law,
tabulated piecewise-linear) whose integrability is checked on construction.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from .bargmann import UFunctional
from .chaos import DiagonalOperator

__all__ = [
    "DivergentNorm",
    "NotSquareIntegrable",
    "ConstantProfile",
    "PowerLawProfile",
    "TabulatedProfile",
    "profile_from_config",
    "SteCoefficients",
    "SteIntegrals",
    "RegularityVerdict",
    "HermiteBasis",
    "compute_integrals",
    "indicator_pairing",
    "ste_s_transform",
    "ste_projected_norm",
    "ste_norm_closed_form",
    "ste_norm",
    "ste_u_functional",
    "classify_regularity",
    "l2_solution_eval",
    "donsker_norm",
    "STE_OPERATOR",
]

STE_OPERATOR = DiagonalOperator.uniform(math.sqrt(2.0))


class DivergentNorm(ArithmeticError):
    """The requested norm is infinite; ``critical_eps`` is the blow-up scale."""

    def __init__(self, message: str, critical_eps: float):
        super().__init__(message)
        self.critical_eps = critical_eps


class NotSquareIntegrable(ArithmeticError):
    pass


# --------------------------------------------------------------------------- coefficient presets

@dataclass(frozen=True)
class ConstantProfile:
    """Constant ``value``; ``square``, when given, is the exact value of ``value**2``."""

    value: float
    square: float | None = None

    @classmethod
    def from_square(cls, square: float) -> "ConstantProfile":
        return cls(math.sqrt(square), float(square))

    def __call__(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.value)

    def integral(self, t: float) -> float:
        return self.value * t

    def integral_sq(self, t: float) -> float:
        sq = self.value * self.value if self.square is None else self.square
        return sq * t

    def weighted_nodes(self, t: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes/weights with ``sum w_i g(x_i) ~ int_0^t f(s) g(s) ds`` for smooth ``g``."""
        x, w = leggauss(n)
        return 0.5 * t * (x + 1.0), 0.5 * t * w * self.value

    def config(self) -> dict:
        if self.square is not None:
            return {"kind": "constant", "square": self.square}
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class PowerLawProfile:
    """``coef * s^exponent``; may be singular at ``s = 0``."""

    coef: float
    exponent: float

    def __call__(self, s):
        return self.coef * np.power(np.asarray(s, dtype=float), self.exponent)

    def integral(self, t: float) -> float:
        e = self.exponent + 1.0
        if e <= 0:
            raise ValueError(f"s^{self.exponent} is not integrable at 0")
        return self.coef * t ** e / e

    def integral_sq(self, t: float) -> float:
        e = 2.0 * self.exponent + 1.0
        if e <= 0:
            raise ValueError(f"s^{self.exponent} is not square-integrable at 0")
        return self.coef * self.coef * t ** e / e

    def weighted_nodes(self, t: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        # Gauss-Jacobi absorbs the endpoint singularity s^exponent exactly
        u, w = roots_jacobi(n, 0.0, self.exponent)
        half = 0.5 * t
        return half * (u + 1.0), w * self.coef * half ** (self.exponent + 1.0)

    def config(self) -> dict:
        return {"kind": "power", "coef": self.coef, "exponent": self.exponent}


@dataclass(frozen=True)
class TabulatedProfile:
    """Piecewise-linear interpolant through ``(times[i], values[i])``, ``times[0] = 0``."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(v) for v in self.times)
        v = tuple(float(x) for x in self.values)
        if len(t) != len(v) or len(t) < 2:
            raise ValueError("tabulated profile needs >= 2 matching times/values")
        if t[0] != 0.0 or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("tabulated times must start at 0 and increase strictly")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("tabulated values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def _check(self, t: float) -> None:
        if t > self.times[-1] * (1 + 1e-12):
            raise ValueError(f"t={t} beyond the tabulated range [0, {self.times[-1]}]")

    def __call__(self, s):
        return np.interp(s, self.times, self.values)

    def _segments(self, t: float):
        self._check(t)
        ts, vs = np.array(self.times), np.array(self.values)
        for i in range(len(ts) - 1):
            a, b = ts[i], min(ts[i + 1], t)
            if b <= a:
                break
            yield a, b, vs[i], float(np.interp(b, ts, vs))

    def integral(self, t: float) -> float:
        return float(sum(0.5 * (b - a) * (fa + fb) for a, b, fa, fb in self._segments(t)))

    def integral_sq(self, t: float) -> float:
        return float(sum((b - a) * (fa * fa + fa * fb + fb * fb) / 3.0 for a, b, fa, fb in self._segments(t)))

    def weighted_nodes(self, t: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        segs = list(self._segments(t))
        per = max(8, int(math.ceil(n / len(segs))))
        x, w = leggauss(per)
        nodes, weights = [], []
        for a, b, fa, fb in segs:
            s = a + 0.5 * (b - a) * (x + 1.0)
            f = fa + (fb - fa) * (s - a) / (b - a)
            nodes.append(s)
            weights.append(0.5 * (b - a) * w * f)
        return np.concatenate(nodes), np.concatenate(weights)

    def config(self) -> dict:
        return {"kind": "tabulated", "times": list(self.times), "values": list(self.values)}


Profile = ConstantProfile | PowerLawProfile | TabulatedProfile


def profile_from_config(entry: dict) -> Profile:
    """Build a preset from ``{kind, params}``.

    ``constant`` takes ``value`` (or ``square``, the value of the squared
    profile), ``power`` takes ``coef`` and ``exponent``, ``tabulated`` takes
    ``times`` and ``values``.
    """
    kind = entry.get("kind")
    if kind == "constant":
        if "square" in entry:
            sq = float(entry["square"])
            if sq < 0:
                raise ValueError("constant 'square' must be non-negative")
            return ConstantProfile.from_square(sq)
        return ConstantProfile(float(entry["value"]))
    if kind == "power":
        return PowerLawProfile(float(entry["coef"]), float(entry["exponent"]))
    if kind == "tabulated":
        return TabulatedProfile(tuple(entry["times"]), tuple(entry["values"]))
    raise ValueError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class SteCoefficients:
    """Viscosity ``nu`` (positive, locally integrable) and noise amplitude ``sigma``
    (locally square-integrable)."""

    nu: Profile
    sigma: Profile

    def __post_init__(self):
        nu, sg = self.nu, self.sigma
        if isinstance(nu, ConstantProfile) and not nu.value > 0:
            raise ValueError("constant nu must be > 0")
        if isinstance(nu, PowerLawProfile):
            if not nu.coef > 0:
                raise ValueError("power-law nu needs coef > 0")
            if not nu.exponent > -1:
                raise ValueError("power-law nu needs exponent > -1 (local integrability)")
        if isinstance(nu, TabulatedProfile) and min(nu.values) < 0:
            raise ValueError("tabulated nu must be non-negative")
        if isinstance(sg, PowerLawProfile) and not 2 * sg.exponent > -1:
            raise ValueError("power-law sigma needs exponent > -1/2 (local square-integrability)")

    @classmethod
    def constant(cls, nu: float, sigma_sq: float) -> "SteCoefficients":
        return cls(ConstantProfile(float(nu)), ConstantProfile.from_square(float(sigma_sq)))

    def config(self) -> dict:
        return {"nu": self.nu.config(), "sigma": self.sigma.config()}


@dataclass(frozen=True)
class SteIntegrals:
    theta: float
    varsigma: float

    @property
    def kappa(self) -> float:
        return self.varsigma / self.theta


def compute_integrals(c: SteCoefficients, t: float) -> SteIntegrals:
    """``theta(t) = int_0^t nu`` and ``varsigma(t) = int_0^t sigma^2``."""
    if not t > 0:
        raise ValueError("t must be > 0")
    theta = c.nu.integral(t)
    if not theta > 0:
        raise ValueError(f"theta({t}) = {theta} is not positive")
    return SteIntegrals(theta, c.sigma.integral_sq(t))


# --------------------------------------------------------------------------- working basis

@dataclass(frozen=True)
class HermiteBasis:
    """Hermite functions ``e_k(s) = scale^{-1/2} h_k((s - center) / scale)``, an
    orthonormal basis of ``L^2(R)`` made of Schwartz functions."""

    center: float = 0.0
    scale: float = 1.0

    @classmethod
    def for_interval(cls, t: float) -> "HermiteBasis":
        """Basis concentrated on ``[0, t]``; captures indicator-like functions quickly."""
        return cls(0.5 * t, t / 20.0)

    def evaluate(self, count: int, s) -> np.ndarray:
        """``out[k, i] = e_k(s_i)`` for ``k < count``."""
        y = (np.asarray(s, dtype=float) - self.center) / self.scale
        out = np.empty((count,) + y.shape)
        out[0] = math.pi ** -0.25 * np.exp(-0.5 * y * y)
        if count > 1:
            out[1] = math.sqrt(2.0) * y * out[0]
        for k in range(1, count - 1):
            out[k + 1] = math.sqrt(2.0 / (k + 1)) * y * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
        return out / math.sqrt(self.scale)

    def coordinates(self, profile: Profile, t: float, count: int, n_nodes: int | None = None) -> np.ndarray:
        """``<1_[0,t] f, e_k>`` for ``k < count`` by profile-weighted Gauss quadrature."""
        n = n_nodes or max(400, 3 * count)
        nodes, weights = profile.weighted_nodes(t, n)
        return self.evaluate(count, nodes) @ weights


def capture_rank(coords: np.ndarray, total_sq: float, capture: float = 0.999) -> int | None:
    """Smallest ``l`` with ``sum_{k<l} coords_k^2 >= capture * total_sq`` (``None`` if never)."""
    if total_sq <= 0:
        return 1
    cum = np.cumsum(np.asarray(coords) ** 2)
    hit = np.nonzero(cum >= capture * total_sq)[0]
    return int(hit[0]) + 1 if hit.size else None


def indicator_pairing(c: SteCoefficients, t: float, phi: Callable[[np.ndarray], np.ndarray],
                      n_nodes: int = 200) -> complex:
    """``<1_[0,t] sigma, phi>`` for a smooth (possibly complex) test function ``phi``."""
    nodes, weights = c.sigma.weighted_nodes(t, n_nodes)
    return complex(np.dot(weights, phi(nodes)))


# --------------------------------------------------------------------------- S-transform and norms

def ste_s_transform(c: SteCoefficients, t: float, x: float, pairing):
    """S-transform of ``u_{t,x}`` given ``<1_[0,t] sigma, phi>`` (complex, scalar or array)."""
    theta = compute_integrals(c, t).theta
    return _heat_gauss(theta, x, pairing)


def _heat_gauss(theta: float, x: float, pairing):
    p = np.asarray(pairing, dtype=complex)
    out = np.exp(-((x - p) ** 2) / (2.0 * theta)) / math.sqrt(2.0 * math.pi * theta)
    return complex(out) if out.ndim == 0 else out


def ste_projected_norm(theta: float, q: float, x: float) -> float:
    """``int |S u(eps P eta)|^2 nu(d eta)`` with ``q = eps^2 ||P(1_[0,t] sigma)||^2``.

    Infinite once ``q >= theta``.
    """
    if q >= theta:
        return math.inf
    r = q / theta
    return (math.exp(-x * x / theta) / (2.0 * math.pi * theta) / math.sqrt(1.0 - r * r)
            * math.exp(q * x * x / (theta * q + theta * theta)))


def _closed_form(c: SteCoefficients, t: float, x: float, eps_sq: float) -> float:
    I = compute_integrals(c, t)
    if eps_sq * I.kappa >= 1.0:
        crit = math.inf if I.kappa == 0 else I.kappa ** -0.5
        raise DivergentNorm(f"eps^2 kappa(t) = {eps_sq * I.kappa:.6g} >= 1", crit)
    return ste_projected_norm(I.theta, eps_sq * I.varsigma, x)


def ste_norm_closed_form(c: SteCoefficients, t: float, x: float, eps: float) -> float:
    """``sup_P int |S u_{t,x}(eps P eta)|^2 d nu``, i.e. ``||u_{t,x}||^2_{G_s}`` for ``2^{s/2} = eps``.

    Raises ``DivergentNorm`` (carrying ``kappa^{-1/2}``) when ``eps^2 kappa(t) >= 1``.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    return _closed_form(c, t, x, eps * eps)


def ste_norm(c: SteCoefficients, t: float, x: float, s: float) -> float:
    """``||u_{t,x}||^2_{G_s}`` with ``K = sqrt(2) Id``; diverges iff ``2^s kappa(t) >= 1``."""
    return _closed_form(c, t, x, 2.0 ** s)


def ste_u_functional(c: SteCoefficients, t: float, x: float, basis: HermiteBasis | None = None,
                     max_rank: int = 1024, n_nodes: int | None = None) -> UFunctional:
    """``S u_{t,x}`` read on projected coordinates of the Hermite working basis.

    ``U(z) = S u_{t,x}(sum_k z_k e_k)``, so the pairing is ``sum_k a_k z_k``
    with ``a_k = <1_[0,t] sigma, e_k>``.  The exact projected integral is
    attached for any diagonal ``K``.
    """
    basis = basis or HermiteBasis.for_interval(t)
    theta = compute_integrals(c, t).theta
    a = basis.coordinates(c.sigma, t, max_rank, n_nodes)

    def func(z: np.ndarray) -> np.ndarray:
        return _heat_gauss(theta, x, z @ a[: z.shape[1]])

    def exact(K: DiagonalOperator, s: float, l: int) -> float:
        q = float(np.sum(a[:l] ** 2 * K.power(2.0 * s, l)))
        return ste_projected_norm(theta, q, x)

    fn = UFunctional(func=func, max_rank=max_rank, projected_exact=exact,
                     name=f"S u(t={t:g}, x={x:g})")
    object.__setattr__(fn, "coefficients", a)
    return fn


# --------------------------------------------------------------------------- classification

@dataclass(frozen=True)
class RegularityVerdict:
    kappa: float
    regularity: str          # "L2" | "DonskerDelta" | "RegularDistribution"
    s_threshold: float       # u_{t,x} in G_s for every s < s_threshold
    tol: float


def classify_regularity(c: SteCoefficients, t: float, tol: float = 1e-9) -> RegularityVerdict:
    """Three-way split by ``kappa(t)`` against 1 (absolute tolerance ``tol``)."""
    kappa = compute_integrals(c, t).kappa
    if abs(kappa - 1.0) <= tol:
        cls = "DonskerDelta"
    elif kappa < 1.0:
        cls = "L2"
    else:
        cls = "RegularDistribution"
    s_thr = math.inf if kappa == 0 else 0.0 - math.log2(kappa)
    return RegularityVerdict(kappa, cls, s_thr, tol)


def l2_solution_eval(c: SteCoefficients, t: float, x: float, g):
    """Explicit square-integrable solution for ``kappa(t) < 1`` at ``<1_[0,t] sigma, omega> = g``.

    With ``varsigma(t) = 0`` the pairing vanishes identically, so ``g`` is ignored.
    """
    I = compute_integrals(c, t)
    if I.kappa >= 1.0:
        raise NotSquareIntegrable(f"kappa(t) = {I.kappa:.6g} >= 1")
    d = I.theta - I.varsigma
    g = np.asarray(g, dtype=float)
    if I.varsigma == 0:
        g = np.zeros_like(g)
    out = np.exp(-((x - g) ** 2) / (2.0 * d)) / math.sqrt(2.0 * math.pi * d)
    return float(out) if out.ndim == 0 else out


def donsker_norm(f_norm_sq: float, x: float, s: float) -> float:
    """``||delta_x(<f, .>)||^2_{G_s}``; finite exactly for ``s < 0``."""
    if not f_norm_sq > 0:
        raise ValueError("f_norm_sq must be > 0")
    if s >= 0:
        raise DivergentNorm("Donsker's delta is not in G_s for s >= 0", 1.0)
    return ste_projected_norm(f_norm_sq, 2.0 ** s * f_norm_sq, x)
