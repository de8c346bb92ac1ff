"""
Finite-dimensional Wiener chaos calculus.

A chaos element is a finite sequence of symmetric kernels ``f^(0), ..., f^(N)``
over an ``m``-dimensional orthonormal basis ``e_1, ..., e_m``.  Each kernel is
stored in the symmetrised monomial basis: the multi-index ``alpha`` stands for
the symmetrisation of ``e_1^{(x) alpha_1} (x) ... (x) e_m^{(x) alpha_m}``, whose
squared tensor norm is ``alpha! / n!``.  In that basis

* the Wick monomial ``<e_alpha, :w^{(x) n}:>`` evaluates to ``prod_k H_{alpha_k}(w_k)``,
* the S-transform is the polynomial ``sum_alpha c_alpha prod_k phi_k^{alpha_k}``,
* the Wick product adds multi-indices.

All objects are immutable; every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import io
import math
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "MultiIndex",
    "SymmetricKernel",
    "ChaosElement",
    "DiagonalOperator",
    "hermite",
    "multi_indices",
    "rank_one_kernel",
    "eval_wick_monomial",
    "l2_norm_sq",
    "gks_norm_sq",
    "s_transform",
    "wick_product",
    "wick_exponential",
    "first_chaos",
    "constant",
    "random_chaos",
    "dumps",
    "loads",
    "save",
    "load",
]

MultiIndex = tuple[int, ...]


def hermite(n: int, alpha_sq: float, x):
    """Hermite polynomial ``H_{n, alpha_sq}`` with generating function
    ``exp(-alpha_sq t^2 / 2 + t x) = sum_n H_{n, alpha_sq}(x) t^n / n!``.

    Uses ``H_{n+1} = x H_n - n alpha_sq H_{n-1}``.  ``x`` may be an array.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if alpha_sq <= 0:
        raise ValueError("alpha_sq must be positive")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, n):
        h_prev, h = h, x * h - k * alpha_sq * h_prev
    return h if h.ndim else float(h)


def _hermite_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """``out[p] = H_{p,1}(x)`` for ``p = 0..n_max``."""
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for p in range(1, n_max):
        out[p + 1] = x * out[p] - p * out[p - 1]
    return out


def multi_indices(n: int, m: int) -> Iterator[MultiIndex]:
    """All ``alpha`` in ``{0..n}^m`` with ``|alpha| = n`` (lexicographically descending)."""
    if m == 0:
        if n == 0:
            yield ()
        return
    for first in range(n, -1, -1):
        for rest in multi_indices(n - first, m - 1):
            yield (first,) + rest


def _factorial_multi(alpha: Sequence[int]) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


@dataclass(frozen=True)
class SymmetricKernel:
    """Order-``n`` symmetric tensor over an ``m``-dimensional basis.

    ``coeffs`` maps length-``m`` multi-indices of order ``n`` to complex
    coefficients; zero entries are dropped.
    """

    order: int
    dim: int
    coeffs: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 0 or self.dim < 0:
            raise ValueError("order and dim must be non-negative")
        clean: dict[MultiIndex, complex] = {}
        for key, value in self.coeffs.items():
            alpha = tuple(int(a) for a in key)
            if len(alpha) > self.dim:
                if any(alpha[self.dim:]):
                    raise ValueError(f"multi-index {alpha} exceeds basis dimension {self.dim}")
                alpha = alpha[: self.dim]
            alpha = alpha + (0,) * (self.dim - len(alpha))
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative entry in multi-index {alpha}")
            if sum(alpha) != self.order:
                raise ValueError(f"multi-index {alpha} has order {sum(alpha)}, expected {self.order}")
            c = complex(value)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0j) + c
        object.__setattr__(self, "coeffs", clean)

    def norm_sq(self) -> float:
        """``||f||^2`` in the full tensor power: ``sum |c_alpha|^2 alpha! / n!``."""
        nf = math.factorial(self.order)
        return float(sum(abs(c) ** 2 * _factorial_multi(a) / nf for a, c in self.coeffs.items()))

    def scaled(self, factor: complex) -> "SymmetricKernel":
        return SymmetricKernel(self.order, self.dim, {a: factor * c for a, c in self.coeffs.items()})

    def with_dim(self, dim: int) -> "SymmetricKernel":
        return SymmetricKernel(self.order, dim, self.coeffs)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Multi-indices as an ``(K, m)`` int array and coefficients as ``(K,)`` complex."""
        if not self.coeffs:
            return np.zeros((0, self.dim), dtype=int), np.zeros(0, dtype=complex)
        keys = sorted(self.coeffs)
        return np.array(keys, dtype=int).reshape(len(keys), self.dim), np.array(
            [self.coeffs[k] for k in keys], dtype=complex)


@dataclass(frozen=True)
class ChaosElement:
    """Finite chaos decomposition ``(f^(0), ..., f^(N))`` sharing one basis dimension."""

    kernels: tuple[SymmetricKernel, ...]

    def __post_init__(self):
        kernels = tuple(self.kernels)
        if not kernels:
            raise ValueError("a chaos element needs at least the order-0 kernel")
        dim = kernels[0].dim
        for n, k in enumerate(kernels):
            if k.order != n:
                raise ValueError(f"kernel at position {n} has order {k.order}")
            if k.dim != dim:
                raise ValueError("all kernels must share the basis dimension")
        object.__setattr__(self, "kernels", kernels)

    @property
    def dim(self) -> int:
        return self.kernels[0].dim

    @property
    def max_order(self) -> int:
        return len(self.kernels) - 1

    @classmethod
    def from_kernels(cls, kernels: Iterable[SymmetricKernel], dim: int | None = None) -> "ChaosElement":
        """Assemble from kernels of arbitrary orders, filling gaps with zero kernels."""
        kernels = list(kernels)
        if dim is None:
            dim = max((k.dim for k in kernels), default=0)
        top = max((k.order for k in kernels), default=0)
        slots = [SymmetricKernel(n, dim) for n in range(top + 1)]
        for k in kernels:
            merged = dict(slots[k.order].coeffs)
            for a, c in k.with_dim(dim).coeffs.items():
                merged[a] = merged.get(a, 0j) + c
            slots[k.order] = SymmetricKernel(k.order, dim, merged)
        return cls(tuple(slots))

    def with_dim(self, dim: int) -> "ChaosElement":
        return ChaosElement(tuple(k.with_dim(dim) for k in self.kernels))

    def __add__(self, other: "ChaosElement") -> "ChaosElement":
        dim = max(self.dim, other.dim)
        return ChaosElement.from_kernels(
            [k.with_dim(dim) for k in self.kernels] + [k.with_dim(dim) for k in other.kernels], dim)

    def __mul__(self, factor: complex) -> "ChaosElement":
        return ChaosElement(tuple(k.scaled(factor) for k in self.kernels))

    __rmul__ = __mul__

    def terms(self) -> Iterator[tuple[int, MultiIndex, complex]]:
        for k in self.kernels:
            for a, c in sorted(k.coeffs.items()):
                yield k.order, a, c


@dataclass(frozen=True)
class DiagonalOperator:
    """Self-adjoint ``K`` acting diagonally, ``K e_k = lambda_k e_k``, with all ``lambda_k >= 1``.

    ``fill`` is the eigenvalue for indices beyond the explicit list, so
    ``DiagonalOperator.uniform(lam)`` is ``lam * Id`` in every dimension.
    """

    eigenvalues: tuple[float, ...] = ()
    fill: float | None = None

    def __post_init__(self):
        eig = tuple(float(v) for v in self.eigenvalues)
        for v in eig + ((self.fill,) if self.fill is not None else ()):
            if not v >= 1.0:
                raise ValueError(f"eigenvalue {v} violates spectrum(K) >= 1")
        object.__setattr__(self, "eigenvalues", eig)

    @classmethod
    def uniform(cls, lam: float) -> "DiagonalOperator":
        return cls((), float(lam))

    @classmethod
    def identity(cls) -> "DiagonalOperator":
        return cls((), 1.0)

    def eigen(self, count: int) -> np.ndarray:
        """The first ``count`` eigenvalues."""
        if count <= len(self.eigenvalues):
            return np.array(self.eigenvalues[:count], dtype=float)
        if self.fill is None:
            raise ValueError(f"operator only defines {len(self.eigenvalues)} eigenvalues, {count} requested")
        extra = count - len(self.eigenvalues)
        return np.array(self.eigenvalues + (self.fill,) * extra, dtype=float)

    def power(self, s: float, count: int) -> np.ndarray:
        """Diagonal of ``K^s`` restricted to the first ``count`` basis vectors."""
        return np.power(self.eigen(count), float(s))

    def describe(self) -> str:
        if not self.eigenvalues:
            return f"{self.fill:.12g}*Id"
        tail = f", then {self.fill:.12g}" if self.fill is not None else ""
        return "diag(" + ", ".join(f"{v:.12g}" for v in self.eigenvalues) + tail + ")"


# --------------------------------------------------------------------------- builders

def constant(c: complex, dim: int = 1) -> ChaosElement:
    return ChaosElement((SymmetricKernel(0, dim, {(0,) * dim: c}),))


def rank_one_kernel(a: Sequence[complex], n: int) -> SymmetricKernel:
    """``phi^{(x) n}`` for ``phi = sum_k a_k e_k``; ``c_alpha = n!/alpha! prod a_k^alpha_k``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    a = [complex(v) for v in a]
    m = len(a)
    nf = math.factorial(n)
    coeffs = {}
    for alpha in multi_indices(n, m):
        mono = 1 + 0j
        for ak, e in zip(a, alpha):
            if e:
                mono *= ak ** e
        if mono != 0:
            coeffs[alpha] = nf // _factorial_multi(alpha) * mono
    return SymmetricKernel(n, m, coeffs)


def first_chaos(f: Sequence[complex]) -> ChaosElement:
    """``<f, .>``, the first-order chaos element with kernel ``f``."""
    m = len(f)
    return ChaosElement((SymmetricKernel(0, m), rank_one_kernel(f, 1)))


def wick_exponential(f: Sequence[complex], max_order: int) -> ChaosElement:
    """``:exp<f, .>:`` truncated after order ``max_order``; kernels ``f^{(x) n} / n!``."""
    if max_order < 0:
        raise ValueError("truncation order must be non-negative")
    return ChaosElement(tuple(rank_one_kernel(f, n).scaled(1.0 / math.factorial(n))
                              for n in range(max_order + 1)))


def random_chaos(rng: np.random.Generator, dim: int, max_order: int,
                 density: float = 1.0, real: bool = False) -> ChaosElement:
    """Random chaos element with standard-normal coefficients scaled by ``1/sqrt(alpha!)``."""
    kernels = []
    for n in range(max_order + 1):
        coeffs = {}
        for alpha in multi_indices(n, dim):
            if density < 1.0 and rng.random() > density:
                continue
            c = rng.standard_normal() + (0.0 if real else 1j * rng.standard_normal())
            coeffs[alpha] = c / math.sqrt(_factorial_multi(alpha))
        kernels.append(SymmetricKernel(n, dim, coeffs))
    return ChaosElement(tuple(kernels))


# --------------------------------------------------------------------------- evaluation

def _monomials(points: np.ndarray, alphas: np.ndarray, table) -> np.ndarray:
    """``prod_k table[alpha_k, :, k]`` for each multi-index; result ``(batch, K)``."""
    batch = points.shape[0]
    out = np.ones((batch, alphas.shape[0]), dtype=table.dtype)
    for k in range(alphas.shape[1]):
        col = alphas[:, k]
        if np.any(col):
            out = out * table[col, :, k].T
    return out


def eval_wick_monomial(k: SymmetricKernel, w) -> complex | np.ndarray:
    """``<f^(n), :w^{(x) n}:> = sum_alpha c_alpha prod_k H_{alpha_k,1}(w_k)``.

    ``w`` holds the coordinates ``<e_j, omega>``; a 2-D array is treated as a batch of rows.
    """
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w2 = np.atleast_2d(w)
    if w2.shape[1] < k.dim:
        raise ValueError("fewer coordinates than the kernel's basis dimension")
    alphas, coeffs = k.arrays()
    if coeffs.size == 0:
        out = np.zeros(w2.shape[0], dtype=complex)
    else:
        table = _hermite_table(k.order, w2[:, : k.dim])
        out = _monomials(w2, alphas, table) @ coeffs
    return complex(out[0]) if single else out


def eval_chaos(F: ChaosElement, w) -> complex | np.ndarray:
    """Value of the random variable ``F`` at noise coordinates ``w``."""
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    total = sum(np.atleast_1d(eval_wick_monomial(k, np.atleast_2d(w))) for k in F.kernels)
    return complex(total[0]) if single else total


def l2_norm_sq(F: ChaosElement) -> float:
    """Ito isometry: ``||F||^2 = sum_n n! ||f^(n)||^2``."""
    return float(sum(math.factorial(k.order) * k.norm_sq() for k in F.kernels))


def gks_norm_sq(F: ChaosElement, K: DiagonalOperator, s: float) -> float:
    """``||F||^2`` in ``G_{K,s}``: ``sum_n n! ||(K^s)^{(x) n} f^(n)||^2``."""
    weights = K.power(2.0 * s, F.dim) if F.dim else np.zeros(0)
    total = 0.0
    for k in F.kernels:
        for alpha, c in k.coeffs.items():
            w = float(np.prod(weights ** np.array(alpha))) if alpha else 1.0
            total += abs(c) ** 2 * _factorial_multi(alpha) * w
    return total


def s_transform(F: ChaosElement, phi) -> complex | np.ndarray:
    """``S F(phi) = sum_n <phi^{(x) n}, f^(n)>`` (bilinear pairing, no conjugation).

    ``phi`` is a complex coordinate vector, or a batch of them as rows.  Missing
    trailing coordinates are read as zero and surplus ones are ignored.
    """
    phi = np.asarray(phi, dtype=complex)
    single = phi.ndim == 1
    z = np.atleast_2d(phi)
    m = F.dim
    if z.shape[1] < m:
        z = np.concatenate([z, np.zeros((z.shape[0], m - z.shape[1]), dtype=complex)], axis=1)
    z = z[:, :m]
    N = F.max_order
    table = np.empty((N + 1, z.shape[0], m), dtype=complex)
    table[0] = 1.0
    for p in range(1, N + 1):
        table[p] = table[p - 1] * z
    out = np.zeros(z.shape[0], dtype=complex)
    for k in F.kernels:
        alphas, coeffs = k.arrays()
        if coeffs.size:
            out = out + _monomials(z, alphas, table) @ coeffs
    return complex(out[0]) if single else out


def wick_product(F: ChaosElement, G: ChaosElement) -> ChaosElement:
    """``F <> G``: kernel of order ``n`` is ``sum_{k+l=n} sym(f^(k) (x) g^(l))``."""
    if F.dim != G.dim:
        raise ValueError("Wick product needs a common basis dimension")
    m = F.dim
    slots: list[dict[MultiIndex, complex]] = [dict() for _ in range(F.max_order + G.max_order + 1)]
    for kf in F.kernels:
        for a, ca in kf.coeffs.items():
            for kg in G.kernels:
                bucket = slots[kf.order + kg.order]
                for b, cb in kg.coeffs.items():
                    key = tuple(x + y for x, y in zip(a, b))
                    bucket[key] = bucket.get(key, 0j) + ca * cb
    return ChaosElement(tuple(SymmetricKernel(n, m, c) for n, c in enumerate(slots)))


# --------------------------------------------------------------------------- text format

def dumps(F: ChaosElement) -> str:
    """Line format: ``dim m``, ``max_order N``, then ``n alpha_1 .. alpha_m re im`` per coefficient."""
    buf = io.StringIO()
    buf.write(f"dim {F.dim}\n")
    buf.write(f"max_order {F.max_order}\n")
    for n, alpha, c in F.terms():
        idx = " ".join(str(a) for a in alpha)
        buf.write(f"{n} {idx} {float(c.real)!r} {float(c.imag)!r}\n".replace("  ", " "))
    return buf.getvalue()


def loads(text: str) -> ChaosElement:
    dim = max_order = None
    entries: list[tuple[int, MultiIndex, complex]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "dim":
            dim = int(parts[1])
            continue
        if parts[0] == "max_order":
            max_order = int(parts[1])
            continue
        if dim is None or max_order is None:
            raise ValueError(f"line {lineno}: coefficient before 'dim'/'max_order' header")
        if len(parts) != dim + 3:
            raise ValueError(f"line {lineno}: expected {dim + 3} fields, got {len(parts)}")
        n = int(parts[0])
        alpha = tuple(int(p) for p in parts[1: dim + 1])
        if n > max_order:
            raise ValueError(f"line {lineno}: order {n} exceeds max_order {max_order}")
        entries.append((n, alpha, complex(float(parts[-2]), float(parts[-1]))))
    if dim is None or max_order is None:
        raise ValueError("missing 'dim' or 'max_order' header")
    slots: list[dict[MultiIndex, complex]] = [dict() for _ in range(max_order + 1)]
    for n, alpha, c in entries:
        slots[n][alpha] = slots[n].get(alpha, 0j) + c
    return ChaosElement(tuple(SymmetricKernel(n, dim, c) for n, c in enumerate(slots)))


def save(F: ChaosElement, path) -> None:
    Path(path).write_text(dumps(F), encoding="utf-8")


def load(path) -> ChaosElement:
    return loads(Path(path).read_text(encoding="utf-8"))
