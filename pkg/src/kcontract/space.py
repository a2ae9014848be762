"""Degree-truncated weighted polynomial spaces ``H_K(E)``.

A vector of ``H_K(E)`` with ``E = C^r`` is stored as an ``(n, r)`` complex array
whose row ``k`` is the coefficient of the monomial ``z^alpha_k``.  Flattened
vectors use the row-major layout ``k * r + e``.  The norm is diagonal in the
monomial basis::

    ||z^alpha e||^2 = 1 / (a_|alpha| * gamma_alpha)

so no Gram matrix is ever formed; all metric-aware linear algebra goes through
the diagonal ``G = diag(1/w)`` and its square root.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DimensionMismatch, HorizonTooShort
from .series import KernelSpec


def _compositions(m: int, d: int):
    """All ``alpha`` with ``|alpha| = m`` in ascending lexicographic order."""
    if d == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in _compositions(m - first, d - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class IndexBasis:
    """Multi-indices ``|alpha| <= N`` in graded lexicographic order."""

    d: int
    N: int

    def __post_init__(self):
        if self.d < 1 or self.N < 0:
            raise ValueError(f"invalid basis parameters d={self.d}, N={self.N}")

    @cached_property
    def indices(self) -> np.ndarray:
        rows = [alpha for m in range(self.N + 1) for alpha in _compositions(m, self.d)]
        return np.array(rows, dtype=np.int64).reshape(len(rows), self.d)

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @cached_property
    def gamma(self) -> tuple:
        """Exact multinomial coefficients ``|alpha|! / alpha!``."""
        out = []
        for row in self.indices:
            g = math.factorial(int(row.sum()))
            for v in row:
                g //= math.factorial(int(v))
            out.append(g)
        return tuple(out)

    @cached_property
    def position(self) -> dict:
        return {tuple(int(v) for v in row): k for k, row in enumerate(self.indices)}

    @cached_property
    def shift_targets(self) -> np.ndarray:
        """``[k, i]`` -> position of ``alpha_k + e_i`` (``-1`` past degree N)."""
        return _kernels.shift_targets(self.indices)

    @cached_property
    def parents(self) -> tuple[np.ndarray, np.ndarray]:
        """Parent position ``alpha - e_i`` and the direction ``i`` (last nonzero slot)."""
        n = len(self)
        parent = np.full(n, -1, dtype=np.int64)
        direction = np.zeros(n, dtype=np.int64)
        targets = self.shift_targets
        for k in range(n):
            for i in range(self.d):
                t = targets[k, i]
                if t >= 0 and parent[t] < 0:
                    parent[t] = k
                    direction[t] = i
        return parent, direction

    def degree_slice(self, m: int) -> slice:
        lo = math.comb(m - 1 + self.d, self.d) if m > 0 else 0
        hi = math.comb(m + self.d, self.d)
        return slice(lo, hi)

    @property
    def basis_id(self) -> str:
        return f"graded-lex:d={self.d}:N={self.N}"

    def __len__(self) -> int:
        return math.comb(self.N + self.d, self.d)

    def __eq__(self, other):
        return isinstance(other, IndexBasis) and (self.d, self.N) == (other.d, other.N)

    def __hash__(self):
        return hash((self.d, self.N))


@dataclass(frozen=True, eq=False)
class SpaceSpec:
    """``H_K(C^coeff_dim)`` truncated at total degree ``basis.N``."""

    kernel: KernelSpec
    basis: IndexBasis
    coeff_dim: int = 1

    def __post_init__(self):
        if self.kernel.max_degree < self.basis.N:
            raise HorizonTooShort(
                f"kernel horizon {self.kernel.max_degree} < space degree {self.basis.N}")
        if self.coeff_dim < 0:
            raise ValueError("coeff_dim must be non-negative")

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def dim(self) -> int:
        return len(self.basis) * self.coeff_dim

    @cached_property
    def weight_exact(self) -> tuple:
        return tuple(self.kernel.a[m] * g for m, g in zip(self.basis.degrees, self.basis.gamma))

    @cached_property
    def weight(self) -> np.ndarray:
        """``a_|alpha| gamma_alpha``, one entry per monomial."""
        a = self.kernel.a_float
        return a[self.basis.degrees] * np.array(self.basis.gamma, dtype=float)

    @cached_property
    def gram(self) -> np.ndarray:
        """Diagonal of the metric on flattened vectors."""
        return np.repeat(1.0 / self.weight, self.coeff_dim)

    @cached_property
    def gram_half(self) -> np.ndarray:
        return np.sqrt(self.gram)

    @cached_property
    def flat_degrees(self) -> np.ndarray:
        return np.repeat(self.basis.degrees, self.coeff_dim)

    def band_mask(self, top: int | None = None) -> np.ndarray:
        """Flattened mask of degrees ``<= top`` (default ``N - 1``, the validated band)."""
        top = self.N - 1 if top is None else top
        return self.flat_degrees <= top

    def with_coeff_dim(self, r: int) -> "SpaceSpec":
        return SpaceSpec(self.kernel, self.basis, r)

    # -- metric --------------------------------------------------------
    def _flat(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.ndim == 2 and f.shape == (len(self.basis), self.coeff_dim):
            f = f.reshape(-1)
        if f.ndim != 1 or f.shape[0] != self.dim:
            raise DimensionMismatch(f"vector of shape {f.shape} in space of dim {self.dim}")
        return f

    def inner(self, f, g) -> complex:
        """``<f, g>`` (conjugate-linear in ``f``)."""
        f, g = self._flat(f), self._flat(g)
        return complex(np.vdot(f, self.gram * g))

    def norm(self, f) -> float:
        f = self._flat(f)
        return float(np.sqrt(np.real(np.vdot(f, self.gram * f))))

    def gram_matrix(self, F) -> np.ndarray:
        """Gram matrix of the columns of a flattened ``(dim, k)`` array."""
        F = np.asarray(F)
        return np.conj(F).T @ (self.gram[:, None] * F)

    def to_ortho(self, F) -> np.ndarray:
        """Coordinates in which the weighted metric becomes the standard one."""
        F = np.asarray(F)
        return self.gram_half[:, None] * F if F.ndim == 2 else self.gram_half * F

    def from_ortho(self, F) -> np.ndarray:
        F = np.asarray(F)
        return F / self.gram_half[:, None] if F.ndim == 2 else F / self.gram_half

    def weighted_adjoint(self, A, target: "SpaceSpec | None" = None) -> np.ndarray:
        """Metric adjoint of a dense operator ``A: self -> target`` (target defaults to self)."""
        target = self if target is None else target
        A = A.toarray() if sp.issparse(A) else np.asarray(A)
        return (1.0 / self.gram)[:, None] * np.conj(A).T * target.gram[None, :]

    # -- evaluation ----------------------------------------------------
    def evaluate(self, f, z) -> np.ndarray:
        """``sum_alpha f_alpha z^alpha`` at one point ``(d,)`` or a batch ``(m, d)``."""
        z = np.asarray(z, dtype=complex)
        vals = _kernels.monomials(np.atleast_2d(z), self.basis.indices) @ np.asarray(f).reshape(len(self.basis), -1)
        return vals[0] if z.ndim == 1 else vals


@dataclass
class SpaceVector:
    space: SpaceSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        self.coeffs = c.reshape(len(self.space.basis), self.space.coeff_dim)

    @property
    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def norm(self) -> float:
        return self.space.norm(self.flat)

    def inner(self, other: "SpaceVector") -> complex:
        return self.space.inner(self.flat, other.flat)

    def __call__(self, z) -> np.ndarray:
        return self.space.evaluate(self.coeffs, z)

    def to_json(self) -> dict:
        return {
            "basis_id": self.space.basis.basis_id,
            "coeffs": [[[float(v.real), float(v.imag)] for v in row] for row in self.coeffs],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, space: SpaceSpec, obj: dict | str) -> "SpaceVector":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if obj["basis_id"] != space.basis.basis_id:
            raise DimensionMismatch(f"basis {obj['basis_id']} does not match {space.basis.basis_id}")
        arr = np.array([[complex(re, im) for re, im in row] for row in obj["coeffs"]], dtype=complex)
        return cls(space, arr)


# ---------------------------------------------------------------------------
# operators

def _scalar_shift(space: SpaceSpec, i: int) -> sp.csr_matrix:
    n = len(space.basis)
    tgt = space.basis.shift_targets[:, i]
    cols = np.nonzero(tgt >= 0)[0]
    return sp.csr_matrix((np.ones(cols.size), (tgt[cols], cols)), shape=(n, n))


def _lift(space: SpaceSpec, m) -> sp.csr_matrix:
    if space.coeff_dim == 1:
        return sp.csr_matrix(m)
    return sp.kron(m, sp.identity(space.coeff_dim), format="csr")


def shift_matrices(space: SpaceSpec):
    """Truncated shifts ``M_{z_i}`` and their adjoints in the weighted metric.

    ``M_{z_i}`` sends ``z^alpha e`` to ``z^{alpha+e_i} e`` and annihilates the top
    degree.  The adjoint has entries ``w_alpha / w_{alpha+e_i}`` (not a transpose).

    Returns
    -------
    (list of csr_matrix, list of csr_matrix)
    """
    w = space.weight
    shifts, adjoints = [], []
    for i in range(space.d):
        m = _scalar_shift(space, i)
        coo = m.tocoo()
        # row = target (alpha + e_i), col = source alpha
        vals = w[coo.col] / w[coo.row]
        adj = sp.csr_matrix((vals, (coo.col, coo.row)), shape=m.shape)
        shifts.append(_lift(space, m))
        adjoints.append(_lift(space, adj))
    return shifts, adjoints


def delta_diagonals(space: SpaceSpec, exact: bool = False):
    """Per-monomial scale factors of ``delta`` and ``Delta``.

    ``delta`` multiplies degree n by ``a_n / a_{n-1}`` (degree 0 by 1) and
    ``Delta`` multiplies degree n by ``a_{n+1} / a_n``.
    """
    k = space.kernel
    if k.max_degree < space.N + 1:
        raise HorizonTooShort(
            f"Delta at degree {space.N} needs a_{space.N + 1}; kernel horizon is {k.max_degree}")
    a = k.a if exact else k.a_float
    small = [a[0] / a[0]] + [a[m] / a[m - 1] for m in range(1, space.N + 1)]
    big = [a[m + 1] / a[m] for m in range(space.N + 1)]
    degs = space.basis.degrees
    if exact:
        return [small[m] for m in degs], [big[m] for m in degs]
    return np.asarray(small)[degs], np.asarray(big)[degs]


def delta_ops(space: SpaceSpec, exact: bool = False):
    """Diagonal operators ``(delta, Delta)``.

    With ``exact=True`` (rational kernels) the per-monomial diagonals come back
    as lists of ``Fraction``; otherwise sparse diagonal matrices on the
    flattened space.
    """
    small, big = delta_diagonals(space, exact=exact)
    if exact:
        return small, big
    r = space.coeff_dim
    return sp.diags(np.repeat(small, r)).tocsr(), sp.diags(np.repeat(big, r)).tocsr()


def cauchy_dual(space: SpaceSpec) -> sp.csr_matrix:
    """Row operator ``[delta M_{z_1}, ..., delta M_{z_d}]`` (``dim x d*dim``)."""
    small, _ = delta_ops(space)
    shifts, _ = shift_matrices(space)
    return sp.hstack([small @ m for m in shifts], format="csr")


def range_projection(space: SpaceSpec) -> sp.csr_matrix:
    """``delta (M_z M_z^*)``: the projection killing the constant term."""
    small, _ = delta_ops(space)
    shifts, adjoints = shift_matrices(space)
    total = sum((m @ a for m, a in zip(shifts, adjoints)), sp.csr_matrix(shifts[0].shape))
    return (small @ total).tocsr()


def column_adjoint(space: SpaceSpec) -> np.ndarray:
    """Dense column operator ``M_z^*: H -> H^d`` (blocks stacked vertically)."""
    _, adjoints = shift_matrices(space)
    return sp.vstack(adjoints, format="csr").toarray()


def coo_triplets(matrix) -> list:
    """``[row, col, value]`` entries; complex values become ``[re, im]``."""
    coo = sp.coo_matrix(matrix)
    out = []
    for r, c, v in zip(coo.row, coo.col, coo.data):
        val = [float(v.real), float(v.imag)] if np.iscomplexobj(coo.data) else float(v)
        out.append([int(r), int(c), val])
    return out


def exact_shift_adjoint_entries(space: SpaceSpec, i: int) -> dict:
    """``{(alpha, alpha+e_i): w_alpha / w_{alpha+e_i}}`` as Fractions (rational kernels)."""
    w = space.weight_exact
    tgt = space.basis.shift_targets[:, i]
    return {(k, int(t)): Fraction(w[k]) / Fraction(w[int(t)]) for k, t in enumerate(tgt) if t >= 0}
