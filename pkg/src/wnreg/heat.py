"""
Feynman-Kac bounds for the stochastic heat equation with coloured noise.

The noise has covariance ``E[W'(t,x) W'(s,y)] = gamma(t - s) Lambda(x - y)``.
For two independent Brownian motions ``B, B~`` started at ``x`` the squared
``G_lambda`` norm of the Skorokhod solution is bounded by

    E[u0(B_t) u0(B~_t) exp(4 lambda^2 E(B, B~))],

where ``E(X, Y) = int_0^t int_0^t gamma(r - s) Lambda(X_r - Y_s) ds dr`` is the
cross energy.  The Stratonovich bound multiplies the integrand by
``exp((E(B, B) + E(B~, B~)) / 2)``.

Kernels and initial data come from preset catalogs whose hypotheses
(non-negativity, boundedness, integrable temporal singularity) are checked on
construction.  Time is discretised on a uniform grid: paths are read at cell
midpoints and ``gamma`` is integrated exactly over each grid cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._mc import Moments, map_chunks, reduce_moments, stream_rng

__all__ = [
    "Unsupported",
    "ConstantTemporal",
    "PowerTemporal",
    "ConstantSpatial",
    "GaussianSpatial",
    "TabulatedSpatial",
    "ConstantInitial",
    "GaussianBumpInitial",
    "TabulatedInitial",
    "NoiseCovariance",
    "BrownianPath",
    "FkEstimate",
    "heat_kernel",
    "sample_bm_pair",
    "sample_bm_paths",
    "cross_energy",
    "fk_sample_terms",
    "fk_bounds",
    "skorokhod_bound",
    "stratonovich_bound",
    "regularized_inner_product",
    "temporal_from_config",
    "spatial_from_config",
    "initial_from_config",
]

_PATH_STREAM = 7  # stream id reserved for Brownian path pairs


class Unsupported(NotImplementedError):
    pass


def heat_kernel(t: float, x, d: int = 1):
    """Gaussian heat kernel ``(2 pi t)^{-d/2} exp(-|x|^2 / 2t)``.

    For ``d > 1`` the last axis of ``x`` holds the coordinates.
    """
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    r2 = x * x if d == 1 else np.sum(x * x, axis=-1)
    out = (2.0 * math.pi * t) ** (-0.5 * d) * np.exp(-r2 / (2.0 * t))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- temporal kernels

@dataclass(frozen=True)
class ConstantTemporal:
    c: float = 1.0

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError("constant gamma must be >= 0")

    def __call__(self, r):
        return np.full_like(np.asarray(r, dtype=float), self.c)

    def cell_weights(self, t: float, steps: int) -> np.ndarray:
        h = t / steps
        return np.full((steps, steps), self.c * h * h)

    def config(self) -> dict:
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class PowerTemporal:
    """``C |r|^{-beta}`` with ``0 < beta < 1`` (integrable singularity at 0)."""

    C: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("power-law gamma needs 0 < beta < 1")
        if not self.C >= 0:
            raise ValueError("power-law gamma needs C >= 0")

    def __call__(self, r):
        return self.C * np.abs(np.asarray(r, dtype=float)) ** -self.beta

    def _antiderivative2(self, u):
        b = self.beta
        return np.abs(u) ** (2.0 - b) / ((1.0 - b) * (2.0 - b))

    def cell_weights(self, t: float, steps: int) -> np.ndarray:
        """``W[i, j] = int_{cell i} int_{cell j} C |r - s|^{-beta} ds dr`` in closed form."""
        h = t / steps
        k = np.arange(steps, dtype=float)
        G = self._antiderivative2
        w = self.C * h ** (2.0 - self.beta) * (G(k + 1) + G(k - 1) - 2.0 * G(k))
        idx = np.abs(np.subtract.outer(np.arange(steps), np.arange(steps)))
        return w[idx]

    def double_integral(self, t: float) -> float:
        """``int_0^t int_0^t C |r - s|^{-beta} ds dr``."""
        b = self.beta
        return self.C * 2.0 * t ** (2.0 - b) / ((1.0 - b) * (2.0 - b))

    def config(self) -> dict:
        return {"kind": "power", "C": self.C, "beta": self.beta}


# --------------------------------------------------------------------------- spatial kernels

def _sq_norm(z: np.ndarray) -> np.ndarray:
    return np.sum(z * z, axis=-1)


@dataclass(frozen=True)
class ConstantSpatial:
    c: float = 1.0
    # Fourier transform is c * delta_0, a finite measure
    dalang: bool = field(default=True, init=False, repr=False)

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError("constant Lambda must be >= 0")

    @property
    def sup(self) -> float:
        return self.c

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return np.full(z.shape[:-1], self.c)

    def config(self) -> dict:
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class GaussianSpatial:
    """``c exp(-|z|^2 / (2 tau))``, a multiple of the heat kernel ``p_tau``."""

    c: float = 1.0
    tau: float = 1.0
    # Fourier transform is a Gaussian, a finite measure
    dalang: bool = field(default=True, init=False, repr=False)

    def __post_init__(self):
        if not self.c >= 0 or not self.tau > 0:
            raise ValueError("gaussian Lambda needs c >= 0 and tau > 0")

    @property
    def sup(self) -> float:
        return self.c

    def __call__(self, z):
        return self.c * np.exp(-_sq_norm(np.asarray(z, dtype=float)) / (2.0 * self.tau))

    def mollified(self, eps: float, d: int) -> "GaussianSpatial":
        """``p_eps * Lambda * p_eps``, again Gaussian with width ``tau + 2 eps``."""
        tau = self.tau + 2.0 * eps
        return GaussianSpatial(self.c * (self.tau / tau) ** (0.5 * d), tau)

    def config(self) -> dict:
        return {"kind": "gaussian", "c": self.c, "tau": self.tau}


@dataclass(frozen=True)
class TabulatedSpatial:
    """Radial profile, piecewise linear in ``|z|`` on ``[0, radii[-1]]``.

    Evaluating beyond the last radius is an error.
    """

    radii: tuple[float, ...]
    values: tuple[float, ...]
    dalang: bool = field(default=False, init=False, repr=False)

    def __post_init__(self):
        r = tuple(float(v) for v in self.radii)
        v = tuple(float(x) for x in self.values)
        if len(r) != len(v) or len(r) < 2:
            raise ValueError("tabulated Lambda needs >= 2 matching radii/values")
        if r[0] != 0.0 or any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("tabulated radii must start at 0 and increase strictly")
        if not all(math.isfinite(x) and x >= 0 for x in v):
            raise ValueError("tabulated Lambda values must be finite and >= 0")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    @property
    def sup(self) -> float:
        return max(self.values)

    def __call__(self, z):
        rad = np.sqrt(_sq_norm(np.asarray(z, dtype=float)))
        if np.any(rad > self.radii[-1]):
            raise ValueError(f"tabulated Lambda undefined beyond |z| = {self.radii[-1]}")
        return np.interp(rad, self.radii, self.values)

    def config(self) -> dict:
        return {"kind": "tabulated", "radii": list(self.radii), "values": list(self.values)}


# --------------------------------------------------------------------------- initial data

@dataclass(frozen=True)
class ConstantInitial:
    value: float = 1.0

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.full(y.shape[:-1], self.value)

    def config(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class GaussianBumpInitial:
    amplitude: float = 1.0
    center: float | tuple[float, ...] = 0.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("bump width must be > 0")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self.amplitude * np.exp(-_sq_norm(y - np.asarray(self.center, dtype=float))
                                       / (2.0 * self.width ** 2))

    def config(self) -> dict:
        c = list(self.center) if isinstance(self.center, tuple) else self.center
        return {"kind": "gaussian", "amplitude": self.amplitude, "center": c, "width": self.width}


@dataclass(frozen=True)
class TabulatedInitial:
    """Radial profile in ``|y|``, held constant beyond the last radius (bounded by construction)."""

    radii: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(v) for v in self.radii)
        v = tuple(float(x) for x in self.values)
        if len(r) != len(v) or len(r) < 1 or any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("tabulated u0 needs increasing radii matching its values")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("tabulated u0 values must be finite")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    def __call__(self, y):
        return np.interp(np.sqrt(_sq_norm(np.asarray(y, dtype=float))), self.radii, self.values)

    def config(self) -> dict:
        return {"kind": "tabulated", "radii": list(self.radii), "values": list(self.values)}


def temporal_from_config(entry: dict):
    kind = entry.get("kind")
    if kind == "constant":
        return ConstantTemporal(float(entry.get("c", 1.0)))
    if kind == "power":
        return PowerTemporal(float(entry.get("C", 1.0)), float(entry["beta"]))
    raise ValueError(f"unknown gamma kind {kind!r}")


def spatial_from_config(entry: dict):
    kind = entry.get("kind")
    if kind == "constant":
        return ConstantSpatial(float(entry.get("c", 1.0)))
    if kind == "gaussian":
        return GaussianSpatial(float(entry.get("c", 1.0)), float(entry.get("tau", 1.0)))
    if kind == "tabulated":
        return TabulatedSpatial(tuple(entry["radii"]), tuple(entry["values"]))
    raise ValueError(f"unknown Lambda kind {kind!r}")


def initial_from_config(entry: dict):
    kind = entry.get("kind")
    if kind == "constant":
        return ConstantInitial(float(entry.get("value", 1.0)))
    if kind == "gaussian":
        c = entry.get("center", 0.0)
        c = tuple(float(v) for v in c) if isinstance(c, (list, tuple)) else float(c)
        return GaussianBumpInitial(float(entry.get("amplitude", 1.0)), c, float(entry.get("width", 1.0)))
    if kind == "tabulated":
        return TabulatedInitial(tuple(entry["radii"]), tuple(entry["values"]))
    raise ValueError(f"unknown u0 kind {kind!r}")


@dataclass(frozen=True)
class NoiseCovariance:
    gamma: ConstantTemporal | PowerTemporal
    Lambda: ConstantSpatial | GaussianSpatial | TabulatedSpatial
    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("spatial dimension must be >= 1")

    def config(self) -> dict:
        return {"d": self.d, "gamma": self.gamma.config(), "Lambda": self.Lambda.config()}


# --------------------------------------------------------------------------- Brownian paths

@dataclass(frozen=True)
class BrownianPath:
    t_grid: np.ndarray      # (M + 1,)
    values: np.ndarray      # (M + 1, d)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def steps(self) -> int:
        return len(self.t_grid) - 1

    @property
    def start(self) -> np.ndarray:
        return self.values[0]

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.values[1:] + self.values[:-1])

    def at(self, times) -> np.ndarray:
        """Piecewise-linear interpolation, shape ``times.shape + (d,)``."""
        times = np.asarray(times, dtype=float)
        cols = [np.interp(times, self.t_grid, self.values[:, k]) for k in range(self.d)]
        return np.stack(cols, axis=-1)


def _start(x, d: int) -> np.ndarray:
    x = np.broadcast_to(np.asarray(x, dtype=float), (d,))
    return np.array(x)


def sample_bm_paths(d: int, t: float, steps: int, x, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` discretised paths from ``x`` on a uniform grid, shape ``(count, steps + 1, d)``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not t > 0:
        raise ValueError("t must be > 0")
    inc = rng.standard_normal((count, steps, d)) * math.sqrt(t / steps)
    out = np.empty((count, steps + 1, d))
    out[:, 0] = _start(x, d)
    np.cumsum(inc, axis=1, out=out[:, 1:])
    out[:, 1:] += out[:, :1]
    return out


def sample_bm_pair(d: int, t: float, steps: int, x, rng: np.random.Generator) -> tuple[BrownianPath, BrownianPath]:
    """Two independent paths from ``x`` on the uniform grid with ``steps`` cells."""
    v = sample_bm_paths(d, t, steps, x, rng, 2)
    grid = np.linspace(0.0, t, steps + 1)
    return BrownianPath(grid, v[0]), BrownianPath(grid, v[1])


# --------------------------------------------------------------------------- energies

def _energy_from_mid(W: np.ndarray, Lam, xm: np.ndarray, ym: np.ndarray) -> np.ndarray:
    """Symmetrised cell sums for batches of midpoint arrays ``(n, M, d)``."""
    A = Lam(xm[:, :, None, :] - ym[:, None, :, :])
    s1 = np.sum(W * A, axis=(1, 2))
    s2 = np.sum(W * np.swapaxes(A, 1, 2), axis=(1, 2))
    return 0.5 * (s1 + s2)


def _check_pair(X: BrownianPath, Y: BrownianPath, t: float) -> None:
    if X.t_grid.shape != Y.t_grid.shape or not np.array_equal(X.t_grid, Y.t_grid):
        raise ValueError("paths must share their time grid")
    if not math.isclose(X.t_grid[-1], t, rel_tol=1e-12):
        raise ValueError(f"path horizon {X.t_grid[-1]} differs from t = {t}")


def cross_energy(cov: NoiseCovariance, X: BrownianPath, Y: BrownianPath, t: float) -> float:
    """``int_0^t int_0^t gamma(r - s) Lambda(X_r - Y_s) ds dr`` on the paths' grid.

    ``Lambda`` is read at cell midpoints of the interpolated paths and
    ``gamma`` is integrated exactly over each cell pair.  The result is
    symmetric in ``(X, Y)`` to the last bit.
    """
    _check_pair(X, Y, t)
    W = cov.gamma.cell_weights(t, X.steps)
    return float(_energy_from_mid(W, cov.Lambda, X.midpoints[None], Y.midpoints[None])[0])


def _batched_energy(W, Lam, xm, ym, block: int = 64) -> np.ndarray:
    out = np.empty(xm.shape[0])
    for a in range(0, xm.shape[0], block):
        out[a:a + block] = _energy_from_mid(W, Lam, xm[a:a + block], ym[a:a + block])
    return out


# --------------------------------------------------------------------------- Feynman-Kac bounds

@dataclass(frozen=True)
class FkEstimate:
    mean: float
    stderr: float
    paths: int
    grid_steps: int
    nonfinite: int
    mode: str
    config: dict

    @property
    def reliable(self) -> bool:
        return self.nonfinite == 0


def fk_sample_terms(cov: NoiseCovariance, u0, t: float, lam: float, X: np.ndarray, Y: np.ndarray) -> dict:
    """Per-pair integrands for path batches ``X, Y`` of shape ``(n, M + 1, d)``.

    Returns arrays ``skorokhod``, ``stratonovich`` and the three energies.
    Overflow yields ``inf`` entries rather than warnings.
    """
    steps = X.shape[1] - 1
    W = cov.gamma.cell_weights(t, steps)
    xm = 0.5 * (X[:, 1:] + X[:, :-1])
    ym = 0.5 * (Y[:, 1:] + Y[:, :-1])
    exy = _batched_energy(W, cov.Lambda, xm, ym)
    exx = _batched_energy(W, cov.Lambda, xm, xm)
    eyy = _batched_energy(W, cov.Lambda, ym, ym)
    pref = u0(X[:, -1]) * u0(Y[:, -1])
    with np.errstate(over="ignore", invalid="ignore"):
        sk = pref * np.exp(4.0 * lam * lam * exy)
        st = sk * np.exp(0.5 * (exx + eyy))
    return {"skorokhod": sk, "stratonovich": st, "E_xy": exy, "E_xx": exx, "E_yy": eyy}


def fk_bounds(cov: NoiseCovariance, u0, t: float, x, lam: float, paths: int, steps: int,
              seed: int = 0, *, chunk: int = 1024, workers: int = 1) -> dict[str, FkEstimate]:
    """Skorokhod and Stratonovich bounds from one common set of path pairs.

    Chunk ``j`` of path pairs comes from its own seeded stream, so results do
    not depend on ``workers``.
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    if not t > 0:
        raise ValueError("t must be > 0")

    def run(j: int, n: int):
        rng = stream_rng(seed, _PATH_STREAM, j)
        X = sample_bm_paths(cov.d, t, steps, x, rng, n)
        Y = sample_bm_paths(cov.d, t, steps, x, rng, n)
        terms = fk_sample_terms(cov, u0, t, lam, X, Y)
        return Moments.from_values(terms["skorokhod"]), Moments.from_values(terms["stratonovich"])

    parts = map_chunks(run, paths, chunk, workers)
    echo = {**cov.config(), "u0": u0.config(), "t": t, "x": np.asarray(x, dtype=float).tolist(),
            "lambda": lam, "paths": paths, "steps": steps, "seed": seed}
    out = {}
    for k, mode in enumerate(("skorokhod", "stratonovich")):
        m = reduce_moments([p[k] for p in parts])
        mean = m.mean if m.count else math.inf
        out[mode] = FkEstimate(mean, m.stderr, paths, steps, m.nonfinite, mode, echo)
    return out


def skorokhod_bound(cov: NoiseCovariance, u0, t: float, x, lam: float, paths: int, steps: int,
                    seed: int = 0, **kw) -> FkEstimate:
    """Monte Carlo value of ``E[u0(B_t) u0(B~_t) exp(4 lambda^2 E(B, B~))]``.

    This is an upper bound for ``||u_{t,x}||^2_lambda``, not the norm itself.
    """
    return fk_bounds(cov, u0, t, x, lam, paths, steps, seed, **kw)["skorokhod"]


def stratonovich_bound(cov: NoiseCovariance, u0, t: float, x, lam: float, paths: int, steps: int,
                       seed: int = 0, **kw) -> FkEstimate:
    """As :func:`skorokhod_bound` with the extra factor ``exp((E(B, B) + E(B~, B~)) / 2)``."""
    sup = getattr(cov.Lambda, "sup", None)
    if sup is None or not math.isfinite(sup):
        raise Unsupported("Stratonovich bound needs a bounded Lambda")
    return fk_bounds(cov, u0, t, x, lam, paths, steps, seed, **kw)["stratonovich"]


# --------------------------------------------------------------------------- regularised product

def regularized_inner_product(cov: NoiseCovariance, X: BrownianPath, Y: BrownianPath, t: float,
                              eps: float, delta: float, nodes: int = 4) -> float:
    """Inner product of the space-time mollified occupation kernels of ``X`` and ``Y``.

    Space is mollified by ``p_eps`` on each side (closed form for a Gaussian
    ``Lambda``); time is averaged over the backward windows
    ``[t - r - min(delta, t - r), t - r]`` with ``1/delta`` normalisation.  As
    ``eps, delta -> 0`` the value tends to :func:`cross_energy`.
    """
    if not isinstance(cov.Lambda, GaussianSpatial):
        raise Unsupported("regularised product is only available for a Gaussian Lambda")
    if not eps > 0 or not delta > 0:
        raise ValueError("eps and delta must be > 0")
    _check_pair(X, Y, t)
    steps = X.steps
    W = cov.gamma.cell_weights(t, steps)
    lam_eps = cov.Lambda.mollified(eps, cov.d)
    # cell midpoints in reversed time u = t - r; W only depends on |i - j|
    u = (np.arange(steps) + 0.5) * (t / steps)
    g, gw = leggauss(nodes)
    width = np.minimum(delta, u)[:, None]
    s = 0.5 * width * (g + 1.0)                      # (M, q)
    wts = 0.5 * width * gw / delta                   # (M, q)
    xp = X.at(u[:, None] - s)                        # (M, q, d)
    yp = Y.at(u[:, None] - s)
    A = lam_eps(xp[:, :, None, None, :] - yp[None, None, :, :, :])   # (M, q, M, q)
    B = np.einsum("iq,iqjr,jr->ij", wts, A, wts)
    return float(0.5 * (np.sum(W * B) + np.sum(W * B.T)))
