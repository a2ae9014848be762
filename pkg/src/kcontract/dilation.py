"""Canonical dilation of a pure K-contraction and the objects built on it.

Coordinates
-----------
``H = C^p`` carries the standard inner product.  The renormed space ``H~``
(inner product ``<Delta_T x, y>``) is handled in orthonormal coordinates
``u = S x`` with ``S = Delta_T^{1/2}``; in these coordinates the row operator
``T~ = (T_i Delta_T)_i`` becomes ``A = [T_1 S, ..., T_d S]`` and all defect
operators are ordinary matrix square roots.  Vectors of ``H_K(D)`` are
flattened with the layout of :mod:`kcontract.space`; metric-aware algebra is
done after multiplying by ``G^{1/2}``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .contraction import (DefectResult, OperatorTuple, PurenessReport, as_tuple, defect_operator,
                          pureness_residuals, weighted_sigma_series, STOP_WINDOW)
from .errors import (DimensionMismatch, HorizonTooShort, IrreconcilableDilations, IsometryDegraded,
                     MembershipAmbiguous, NotMinimal, NotPure, RankDeficiencyWarning, SeriesNotConverged,
                     SpectralUnsafe)
from .series import KernelSpec
from .space import IndexBasis, SpaceSpec, SpaceVector, delta_diagonals, shift_matrices

MEM_TOL = 1e-8
SEP_TOL = 1e-10


# ---------------------------------------------------------------------------
# small linear-algebra helpers

def _psd_sqrt(X: np.ndarray) -> np.ndarray:
    X = 0.5 * (X + X.conj().T)
    lam, V = np.linalg.eigh(X)
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.conj().T


def _phase_fix(V: np.ndarray) -> np.ndarray:
    V = np.array(V, dtype=complex)
    for k in range(V.shape[1]):
        col = V[:, k]
        big = np.abs(col) > 1e-8 * max(np.abs(col).max(initial=0.0), 1e-300)
        idx = np.flatnonzero(big)
        if idx.size:
            V[:, k] = col * (abs(col[idx[0]]) / col[idx[0]])
    return V


def _range_basis(X: np.ndarray, rel_tol: float = SEP_TOL, what: str = "subspace") -> np.ndarray:
    """Orthonormal basis of the column space with a relative singular-value cutoff."""
    if X.size == 0:
        return np.zeros((X.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((X.shape[0], 0), dtype=complex)
    cut = rel_tol * s[0]
    grey = (s > cut) & (s < 100.0 * cut)
    if grey.any():
        warnings.warn(f"{what}: singular values {s[grey]} close to the rank cutoff {cut:.2e}",
                      RankDeficiencyWarning, stacklevel=3)
    return _phase_fix(U[:, s > cut])


def _complement_basis(Q: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(Q)`` in ``C^n``."""
    if Q.shape[1] == 0:
        return np.eye(n, dtype=complex)
    return _phase_fix(sla.null_space(Q.conj().T, rcond=SEP_TOL))


def _op_norm(X: np.ndarray) -> float:
    return float(np.linalg.norm(X, 2)) if X.size else 0.0


# ---------------------------------------------------------------------------
# dilation matrix

def dilation_blocks(T, C: np.ndarray, space: SpaceSpec) -> np.ndarray:
    """Blocks ``a_|alpha| gamma_alpha C T^{*alpha}`` as an ``(n, r, p)`` array."""
    T = as_tuple(T)
    parent, direction = space.basis.parents
    powers = _kernels.adjoint_powers(T.T_star, parent, direction)
    return space.weight[:, None, None] * np.einsum("rp,npq->nrq", C, powers)


def dilation_matrix(T, C: np.ndarray, space: SpaceSpec) -> np.ndarray:
    """Matrix of ``h -> sum_alpha a_|alpha| gamma_alpha C T^{*alpha} h z^alpha`` (``n*r x p``)."""
    if space.coeff_dim != C.shape[0]:
        raise DimensionMismatch(f"space coefficient dimension {space.coeff_dim} != rows of C {C.shape[0]}")
    blocks = dilation_blocks(T, C, space)
    return blocks.reshape(-1, blocks.shape[2])


def metric_adjoint_of_dilation(J: np.ndarray, space: SpaceSpec) -> np.ndarray:
    """``J^* G``: the adjoint of ``J: C^p -> H_K`` in the weighted metric."""
    return J.conj().T * space.gram[None, :]


def isometry_curve(J: np.ndarray, space: SpaceSpec) -> np.ndarray:
    """``||I - J_{<=n}^* G J_{<=n}||`` for every truncation degree ``n <= N``."""
    p = J.shape[1]
    acc = np.zeros((p, p), dtype=complex)
    out = []
    for m in range(space.N + 1):
        sl = space.basis.degree_slice(m)
        rows = slice(sl.start * space.coeff_dim, sl.stop * space.coeff_dim)
        Jm = J[rows]
        acc += Jm.conj().T @ (space.gram[rows, None] * Jm)
        out.append(_op_norm(np.eye(p) - acc))
    return np.array(out)


def intertwining_residuals(T, J: np.ndarray, space: SpaceSpec, band_only: bool = False) -> list:
    """``||J T_i^* - M_{z_i}^* J||`` (metric operator norm), optionally on degrees ``<= N-1`` only."""
    T = as_tuple(T)
    _, adjoints = shift_matrices(space)
    mask = space.band_mask() if band_only else np.ones(space.dim, dtype=bool)
    out = []
    for i in range(T.d):
        diff = J @ T.T_star[i] - adjoints[i] @ J
        out.append(_op_norm(space.gram_half[mask, None] * diff[mask]))
    return out


# ---------------------------------------------------------------------------
# membership in the range of the column adjoint shift

def _adjoint_column_blocks(space: SpaceSpec):
    """Per degree ``m < N``: orthonormal basis (ortho coordinates) of the range of
    ``f_{m+1} -> (M_{z_i}^* f)_i`` restricted to degree ``m``, scalar coefficients."""
    scalar = space.with_coeff_dim(1)
    _, adjoints = shift_matrices(scalar)
    gh = scalar.gram_half
    out = []
    for m in range(space.N):
        lo, hi = space.basis.degree_slice(m), space.basis.degree_slice(m + 1)
        blocks = []
        for adj in adjoints:
            blk = adj[lo, hi].toarray()
            blocks.append(gh[lo, None] * blk / gh[None, hi])
        Q, _ = np.linalg.qr(np.vstack(blocks))
        out.append((lo, Q))
    return out


def adjoint_range_residual(columns: list, space: SpaceSpec) -> np.ndarray:
    """Residual of ``(g_1, ..., g_d)`` after projection onto ``Im M_z^*`` on degrees ``<= N-1``.

    ``columns[i]`` is a flattened ``(dim, k)`` array (component ``i`` for ``k``
    candidates).  Returns the stacked residuals in orthonormal coordinates
    (one column per candidate).
    """
    r = space.coeff_dim
    n = len(space.basis)
    k = columns[0].shape[1]
    comps = [(space.gram_half[:, None] * g).reshape(n, r, k) for g in columns]
    parts = []
    for lo, Q in _adjoint_column_blocks(space):
        y = np.concatenate([c[lo] for c in comps], axis=0)          # (d*n_m, r, k)
        proj = np.einsum("ab,bre->are", Q, np.einsum("ba,bre->are", Q.conj(), y))
        parts.append((y - proj).reshape(-1, k))
    if not parts:
        return np.zeros((0, k), dtype=complex)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# inner function polynomials

@dataclass(eq=False)
class InnerFunctionPoly:
    """Operator polynomial ``W(z) = sum_alpha W_alpha z^alpha`` with ``W_alpha: C^s -> C^r``.

    ``coeffs`` has shape ``(len(basis), target_dim, source_dim)`` in the graded
    order of ``basis``.
    """

    basis: IndexBasis
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 3 or self.coeffs.shape[0] != len(self.basis):
            raise DimensionMismatch(f"coefficient array {self.coeffs.shape} does not match basis of size {len(self.basis)}")

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def target_dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def source_dim(self) -> int:
        return self.coeffs.shape[2]

    def degree(self, tol: float = 0.0) -> int:
        """Largest total degree carrying a coefficient of norm above ``tol``."""
        norms = np.linalg.norm(self.coeffs.reshape(len(self.basis), -1), axis=1)
        nz = np.flatnonzero(norms > tol)
        return int(self.basis.degrees[nz[-1]]) if nz.size else 0

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        mono = _kernels.monomials(np.atleast_2d(z), self.basis.indices)
        vals = np.einsum("mk,krs->mrs", mono, self.coeffs)
        return vals[0] if z.ndim == 1 else vals

    def columns(self, space: SpaceSpec) -> np.ndarray:
        """``[W e_1, ..., W e_s]`` as flattened vectors of ``space`` (zero padded or cut)."""
        if space.d != self.d or space.coeff_dim != self.target_dim:
            raise DimensionMismatch("space does not match the polynomial's variables or target")
        n = min(len(space.basis), len(self.basis))
        out = np.zeros((len(space.basis), self.target_dim, self.source_dim), dtype=complex)
        out[:n] = self.coeffs[:n]
        return out.reshape(-1, self.source_dim)

    def vector(self, space: SpaceSpec, x) -> SpaceVector:
        return SpaceVector(space, self.columns(space) @ np.asarray(x, dtype=complex))

    def to_json(self) -> dict:
        return {
            "basis_id": self.basis.basis_id,
            "source_dim": self.source_dim,
            "target_dim": self.target_dim,
            "coeffs": [[[[float(v.real), float(v.imag)] for v in row] for row in blk] for blk in self.coeffs],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj: dict | str) -> "InnerFunctionPoly":
        if isinstance(obj, str):
            obj = json.loads(obj)
        _, d, N = obj["basis_id"].split(":")
        basis = IndexBasis(int(d.split("=")[1]), int(N.split("=")[1]))
        arr = np.array([[[complex(re, im) for re, im in row] for row in blk] for blk in obj["coeffs"]],
                       dtype=complex)
        arr = arr.reshape(len(basis), int(obj["target_dim"]), int(obj["source_dim"]))
        return cls(basis, arr)


# ---------------------------------------------------------------------------
# dilation pack

@dataclass(frozen=True, eq=False)
class DilationPack:
    T: OperatorTuple
    kernel: KernelSpec
    space: SpaceSpec
    defect: DefectResult
    pureness: PurenessReport
    C: np.ndarray
    J: np.ndarray = field(repr=False)
    DeltaT: np.ndarray = field(repr=False)
    DeltaT_from_J: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    S_inv: np.ndarray = field(repr=False)
    Ttilde: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    DTtilde: np.ndarray = field(repr=False)
    DTtilde_star: np.ndarray = field(repr=False)
    defect_tilde_basis: np.ndarray = field(repr=False)
    tildeD_basis: np.ndarray = field(repr=False)
    membership_singular_values: np.ndarray = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.space.N

    @property
    def validated_band(self) -> tuple:
        return (0, self.space.N - 1)

    @property
    def truncation_tail(self) -> float:
        """Pureness residual at the truncation degree (series route)."""
        return float(self.pureness.residuals[self.N])

    @property
    def wandering_dim_expected(self) -> int:
        return int(self.tildeD_basis.shape[1])

    def candidate_tuple(self, Y: np.ndarray) -> np.ndarray:
        """``(+)I_T^{-1} D_T~ y`` in ``H^d`` for columns ``y`` given in orthonormal ``H~^d`` coordinates."""
        return np.kron(np.eye(self.T.d), self.S_inv) @ (self.DTtilde @ Y)

    def report(self) -> dict:
        out = dict(self.diagnostics)
        out.update({
            "N": self.N,
            "validated_band": list(self.validated_band),
            "defect_dim": self.defect.defect_dim,
            "deltaT_eigs": [float(v) for v in np.linalg.eigvalsh(self.DeltaT)],
            "tildeD_dim": self.wandering_dim_expected,
            "truncation_tail": self.truncation_tail,
        })
        return out


def _series_delta_T(T, kernel: KernelSpec, defect_op: np.ndarray, series_tol: float):
    coeffs = kernel.a_float[1:]
    value, used, tail = weighted_sigma_series(T, defect_op, coeffs, series_tol, "Delta_T series")
    return 0.5 * (value + value.conj().T), used, tail


def canonical_dilation(T, kernel: KernelSpec, N: int, series_tol: float = 1e-14,
                       iso_tol: float | None = 1e-6, mem_tol: float = MEM_TOL,
                       pure_tol: float = 1e-8, defect: DefectResult | None = None) -> DilationPack:
    """Canonical dilation truncated at total degree ``N`` plus the renormed data.

    ``Delta_T`` is summed as ``sum_n a_{n+1} sigma_T^n((1/K)(T))`` with the
    series stopping rule; the value ``J^* G Delta J`` obtained from the
    truncated dilation is kept as a diagnostic only.

    Raises
    ------
    NotPure
        the pureness verdict at ``pure_tol`` fails.
    IsometryDegraded
        ``||J^* G J - I|| > iso_tol``; increase ``N``.
    MembershipAmbiguous
        the range test for the admissible subspace hits its grey zone.
    """
    T = as_tuple(T)
    if N < 1:
        raise HorizonTooShort("truncation degree N must be at least 1")
    if kernel.max_degree < N + 1:
        raise HorizonTooShort(f"kernel horizon {kernel.max_degree} < N + 1 = {N + 1}")
    if defect is None:
        defect = defect_operator(T, kernel, series_tol=series_tol)
    pure = pureness_residuals(T, kernel, defect)
    if not pure.is_pure(pure_tol):
        err = NotPure(f"pureness residual {pure.residuals[-1]:.3e} at horizon {pure.horizon} "
                      f"(tolerance {pure_tol:g})")
        err.report = pure
        raise err
    d, p = T.d, T.p
    C = defect.C
    r = C.shape[0]
    space = SpaceSpec(kernel, IndexBasis(d, N), r)
    J = dilation_matrix(T, C, space)

    iso_curve = isometry_curve(J, space)
    iso = float(iso_curve[-1])
    inter_full = intertwining_residuals(T, J, space)
    inter_band = intertwining_residuals(T, J, space, band_only=True)
    # exact tail of the top-degree loss: ||a_N T_i sigma^N(D) T_i^*||^{1/2}
    sigmaN = defect.defect_op
    for _ in range(N):
        sigmaN = _apply_sigma(T, sigmaN)
    inter_theory = [float(np.sqrt(kernel.a_float[N] * _op_norm(T.T[i] @ sigmaN @ T.T_star[i])))
                    for i in range(d)]

    diagnostics = {
        "isometry_residual": iso,
        "isometry_curve": [float(v) for v in iso_curve],
        "intertwining_residuals": inter_full,
        "intertwining_residuals_band": inter_band,
        "intertwining_theoretical": inter_theory,
    }
    if kernel.max_degree >= N + 2:
        space2 = SpaceSpec(kernel, IndexBasis(d, N + 2), r)
        J2 = dilation_matrix(T, C, space2)
        diagnostics["isometry_residual_N_plus_2"] = float(isometry_curve(J2, space2)[-1])
        diagnostics["intertwining_residuals_N_plus_2"] = intertwining_residuals(T, J2, space2)
    if iso_tol is not None and iso > iso_tol:
        err = IsometryDegraded(f"isometry residual {iso:.3e} > {iso_tol:g} at N={N}; "
                               f"curve tail {diagnostics['isometry_curve'][-3:]}")
        err.diagnostics = diagnostics
        raise err

    DeltaT, used, tail = _series_delta_T(T, kernel, defect.defect_op, series_tol)
    _, big = delta_diagonals(space)
    DeltaT_J = J.conj().T @ ((space.gram * np.repeat(big, r))[:, None] * J)
    DeltaT_J = 0.5 * (DeltaT_J + DeltaT_J.conj().T)
    evals, evecs = np.linalg.eigh(DeltaT)
    S = (evecs * np.sqrt(evals)) @ evecs.conj().T
    S_inv = (evecs / np.sqrt(evals)) @ evecs.conj().T
    Ttilde = np.einsum("iab,bc->iac", T.T, DeltaT)
    A = np.hstack([T.T[i] @ S for i in range(d)])
    DA = _psd_sqrt(np.eye(d * p) - A.conj().T @ A)
    DAs = _psd_sqrt(np.eye(p) - A @ A.conj().T)

    # defect space of T~ and the admissible subspace inside it
    V_D = _range_basis(DA, what="defect space of T~")
    cand = np.kron(np.eye(d), S_inv) @ (DA @ V_D)
    comps = [J @ cand[i * p:(i + 1) * p] for i in range(d)]
    L = adjoint_range_residual(comps, space) if V_D.shape[1] else np.zeros((0, 0))
    if V_D.shape[1] and L.shape[0]:
        _, sv, Vh = np.linalg.svd(L, full_matrices=True)
        sv_full = np.zeros(V_D.shape[1])
        sv_full[:sv.size] = sv
        grey = (sv_full >= mem_tol) & (sv_full <= 10 * mem_tol)
        if grey.any():
            raise MembershipAmbiguous(
                f"range residuals {sv_full[grey]} inside the ambiguity band [{mem_tol:g}, {10 * mem_tol:g}]")
        null = Vh.conj().T[:, sv_full < mem_tol]
        V_tilde = _phase_fix(V_D @ null)
    else:
        sv_full = np.zeros(V_D.shape[1])
        V_tilde = V_D

    lower = 1.0 / kernel.ratio_sup
    V_r = defect.basis
    Dstar_target = V_r @ C
    diagnostics.update({
        "deltaT_series_terms": used,
        "deltaT_series_tail": tail,
        "deltaT_J_discrepancy": _op_norm(DeltaT - DeltaT_J),
        "deltaT_min_eig": float(evals[0]),
        "deltaT_lower_bound": lower,
        "deltaT_bound_ok": bool(evals[0] >= lower * (1 - 1e-10)),
        "ttilde_min_gap": float(np.linalg.eigvalsh(np.eye(p) - A @ A.conj().T)[0]),
        "ttilde_projection_residual": _op_norm(
            A @ A.conj().T - (J.conj().T @ (space.gram[:, None] * J) - C.conj().T @ (J[:r] / space.weight[0]))),
        "julia_unitarity_residual": julia_unitarity_residual(A, DA, DAs),
        "defect_star_residual": _op_norm(DAs - Dstar_target),
        "ttilde_intertwining_residual": _op_norm(A @ DA - DAs @ A),
        "membership_singular_values": [float(v) for v in sv_full],
        "mem_tol": mem_tol,
    })
    return DilationPack(
        T=T, kernel=kernel, space=space, defect=defect, pureness=pure, C=C, J=J, DeltaT=DeltaT,
        DeltaT_from_J=DeltaT_J, S=S, S_inv=S_inv, Ttilde=Ttilde, A=A, DTtilde=DA, DTtilde_star=DAs,
        defect_tilde_basis=V_D, tildeD_basis=V_tilde, membership_singular_values=sv_full,
        diagnostics=diagnostics,
    )


def _apply_sigma(T: OperatorTuple, X: np.ndarray) -> np.ndarray:
    return np.einsum("iab,bc,idc->ad", T.T, X, np.conj(T.T))


def julia_unitarity_residual(A: np.ndarray, DA: np.ndarray, DAs: np.ndarray) -> float:
    """``||U^* U - I||`` for ``U = [[A, D_{A*}], [D_A, -A^*]]``."""
    U = np.block([[A, DAs], [DA, -A.conj().T]])
    return _op_norm(U.conj().T @ U - np.eye(U.shape[1]))


# ---------------------------------------------------------------------------
# adjoint of the dilation

def adjoint_dilation_apply(pack: DilationPack, f) -> np.ndarray:
    """``sum_alpha T^alpha C^* f_alpha`` for ``f`` in ``pack.space``."""
    if isinstance(f, SpaceVector):
        if f.space.basis != pack.space.basis or f.space.coeff_dim != pack.space.coeff_dim:
            raise DimensionMismatch("vector lives in a different space")
        coeffs = f.coeffs
    else:
        arr = np.asarray(f, dtype=complex)
        if arr.size != pack.space.dim:
            raise DimensionMismatch(f"vector of size {arr.size} in space of dim {pack.space.dim}")
        coeffs = arr.reshape(len(pack.space.basis), pack.space.coeff_dim)
    parent, direction = pack.space.basis.parents
    powers = _kernels.adjoint_powers(pack.T.T_star, parent, direction)   # T^{*alpha}
    # (T^{*alpha})^* = T^alpha
    return np.einsum("nqp,qr,nr->p", powers.conj(), pack.C.conj().T, coeffs)


# ---------------------------------------------------------------------------
# wandering subspace

@dataclass(frozen=True, eq=False)
class WanderingResult:
    basis: np.ndarray                 # flattened, orthonormal in the weighted metric
    dim: int
    invariant_dim: int                # dim of M intersected with the truncated space
    shifted_dim: int

    def vectors(self, space: SpaceSpec) -> list:
        return [SpaceVector(space, self.basis[:, k]) for k in range(self.dim)]


def wandering_subspace(pack: DilationPack) -> WanderingResult:
    """Orthonormal basis of ``W_N = M_N (-) span{z_i g : g in M_{N-1}}``.

    ``M_N`` is the orthogonal complement of ``Im J`` in the truncated space,
    which equals ``M`` intersected with degrees ``<= N`` exactly; ``M_{N-1}`` is
    its part supported on degrees ``<= N-1``.  Shifts of the latter stay inside
    ``M_N``, so the construction loses nothing at the truncation boundary.
    """
    space = pack.space
    Jo = space.to_ortho(pack.J)
    n = space.dim
    Q_img = _range_basis(Jo, what="range of the dilation")
    M_full = _complement_basis(Q_img, n)
    band = space.band_mask()
    Q_band = _range_basis(Jo[band], what="range of the dilation on the band")
    M_low_band = _complement_basis(Q_band, int(band.sum()))
    M_low = np.zeros((n, M_low_band.shape[1]), dtype=complex)
    M_low[band] = M_low_band
    shifts, _ = shift_matrices(space)
    low = space.from_ortho(M_low)
    shifted = np.hstack([space.to_ortho(m @ low) for m in shifts]) if low.shape[1] else np.zeros((n, 0))
    Q_s = _range_basis(shifted, what="shifted invariant subspace")
    rest = M_full - Q_s @ (Q_s.conj().T @ M_full)
    U, s, _ = np.linalg.svd(rest, full_matrices=False)
    keep = s > 0.5
    grey = (s > SEP_TOL) & (s <= 0.5)
    if grey.any():
        warnings.warn(f"wandering subspace: intermediate singular values {s[grey]}", RankDeficiencyWarning,
                      stacklevel=2)
    W = _phase_fix(U[:, keep])
    return WanderingResult(basis=space.from_ortho(W), dim=int(keep.sum()), invariant_dim=M_full.shape[1],
                           shifted_dim=Q_s.shape[1])


def wandering_checks(pack: DilationPack, wand: WanderingResult) -> dict:
    """Decomposition ``f = f(0) + delta M_z (J x_i)`` and the norm identity for each basis vector."""
    space = pack.space
    d, r = pack.T.d, space.coeff_dim
    small, _ = delta_diagonals(space)
    small = np.repeat(small, r)
    shifts, adjoints = shift_matrices(space)
    Jadj = metric_adjoint_of_dilation(pack.J, space)
    decomp, kernel_res, norm_rel = [], [], []
    for k in range(wand.dim):
        f = wand.basis[:, k]
        f0 = f[:r]
        xs = [Jadj @ (adj @ f) for adj in adjoints]
        recon = np.zeros_like(f)
        recon[:r] = f0
        for i in range(d):
            recon += small * (shifts[i] @ (pack.J @ xs[i]))
        decomp.append(space.norm(f - recon) / space.norm(f))
        kernel_res.append(float(np.linalg.norm(pack.C.conj().T @ f0
                                               + sum(pack.T.T[i] @ pack.DeltaT @ xs[i] for i in range(d)))))
        lhs = space.norm(f) ** 2
        rhs = np.vdot(f0, f0).real / space.weight[0] + sum(np.vdot(x, pack.DeltaT @ x).real for x in xs)
        norm_rel.append(abs(lhs - rhs) / lhs)
    return {
        "decomposition_residual": max(decomp, default=0.0),
        "kernel_equation_residual": max(kernel_res, default=0.0),
        "norm_identity_relative_error": max(norm_rel, default=0.0),
    }


# ---------------------------------------------------------------------------
# F(ZT*) and the inner function W_T

def F_eval(T, kernel: KernelSpec, z, series_tol: float = 1e-14, margin: float = 0.05,
           return_terms: bool = False):
    """``F(ZT^*) = sum_n a_{n+1} (ZT^*)^n`` with the series stopping rule.

    Raises
    ------
    SpectralUnsafe
        ``rho(ZT^*) >= r_estimate * (1 - margin)``.
    SeriesNotConverged
        the stopping rule did not fire within the kernel horizon.
    """
    T = as_tuple(T)
    X = T.Z_adjoint(z)
    rho = float(np.max(np.abs(np.linalg.eigvals(X)))) if T.p else 0.0
    if rho >= kernel.r_estimate * (1.0 - margin):
        raise SpectralUnsafe(f"rho(Z T^*) = {rho:.4g} at z={np.asarray(z)} is not below "
                             f"{kernel.r_estimate * (1 - margin):.4g}")
    coeffs = kernel.a_float[1:]
    total = np.zeros((T.p, T.p), dtype=complex)
    Xn = np.eye(T.p, dtype=complex)
    run, nonzero = 0, 0
    for n, cn in enumerate(coeffs):
        mag = cn * _op_norm(Xn)
        if mag > 0.0:
            nonzero = n + 1
        total += cn * Xn
        run = run + 1 if mag < series_tol else 0
        if run >= STOP_WINDOW:
            return (total, nonzero) if return_terms else total
        Xn = Xn @ X
    raise SeriesNotConverged(f"F(ZT^*) series unmet stop criterion at horizon {kernel.max_degree}")


@dataclass(frozen=True, eq=False)
class WTResult:
    W: InnerFunctionPoly
    quadruple: object       # RealizationQuadruple
    V_tilde: np.ndarray


def build_WT(pack: DilationPack) -> WTResult:
    """K-inner function of the dilation and its transfer realization.

    The degree-0 coefficient is ``-T~`` restricted to the admissible subspace
    (read in defect coordinates); higher coefficients come from the Cauchy
    dual applied to ``(+)J I_T^{-1} D_T~``.  The source space is given an
    orthonormal basis so consumers see the standard inner product.
    """
    from .realization import RealizationQuadruple

    space = pack.space
    d, p, r = pack.T.d, pack.T.p, space.coeff_dim
    V = pack.tildeD_basis
    s = V.shape[1]
    B = pack.candidate_tuple(V)
    Dmat = -pack.defect.basis.conj().T @ (pack.A @ V)
    small, _ = delta_diagonals(space)
    small = np.repeat(small, r)
    shifts, _ = shift_matrices(space)
    cols = np.zeros((space.dim, s), dtype=complex)
    for i in range(d):
        cols += small[:, None] * (shifts[i] @ (pack.J @ B[i * p:(i + 1) * p]))
    cols[:r] += Dmat
    W = InnerFunctionPoly(space.basis, cols.reshape(len(space.basis), r, s))
    quad = RealizationQuadruple(T=pack.T, B=B, C=pack.C, D=Dmat, DeltaT=pack.DeltaT)
    return WTResult(W=W, quadruple=quad, V_tilde=V)


def span_angles(W: InnerFunctionPoly, wand: WanderingResult, space: SpaceSpec) -> np.ndarray:
    """Principal angles between ``span{W x}`` and the wandering subspace (weighted metric)."""
    A = space.to_ortho(W.columns(space))
    B = space.to_ortho(wand.basis)
    if A.shape[1] != B.shape[1]:
        return np.array([np.pi / 2])
    if A.shape[1] == 0:
        return np.zeros(0)
    return sla.subspace_angles(A, B)


def transfer_identity_residual(pack: DilationPack, points, rng: np.random.Generator) -> float:
    """Max relative gap between ``C F(ZT^*) Z x`` and ``(delta M_z (J x_i))(z)`` for random ``x``."""
    space = pack.space
    d, p, r = pack.T.d, pack.T.p, space.coeff_dim
    x = rng.normal(size=(d, p)) + 1j * rng.normal(size=(d, p))
    small, _ = delta_diagonals(space)
    small = np.repeat(small, r)
    shifts, _ = shift_matrices(space)
    g = sum(small * (shifts[i] @ (pack.J @ x[i])) for i in range(d))
    worst = 0.0
    for z in points:
        lhs = pack.C @ F_eval(pack.T, pack.kernel, z) @ np.tensordot(z, x, axes=1)
        rhs = space.evaluate(g, z)
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(lhs))))
    return worst


# ---------------------------------------------------------------------------
# minimality and uniqueness

def minimal_support(J_any: np.ndarray, space: SpaceSpec, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the smallest ``E_0`` with ``Im J`` inside ``H_K(E_0)``."""
    n, r = len(space.basis), space.coeff_dim
    if J_any.shape[0] != n * r:
        raise DimensionMismatch(f"dilation has {J_any.shape[0]} rows, space has {n * r}")
    blocks = (space.gram_half[:, None] * J_any).reshape(n, r, -1)
    stacked = np.transpose(blocks, (1, 0, 2)).reshape(r, -1)
    return _range_basis(stacked, rank_tol, what="dilation support")


def is_minimal(J_any: np.ndarray, space: SpaceSpec, rank_tol: float = 1e-10) -> bool:
    return minimal_support(J_any, space, rank_tol).shape[1] == space.coeff_dim


@dataclass(frozen=True)
class DilationComparison:
    U: np.ndarray
    unitarity_defect: float
    residual: float


def compare_dilations(J1: np.ndarray, J2: np.ndarray, space1: SpaceSpec, space2: SpaceSpec,
                      rec_tol: float = 1e-8) -> DilationComparison:
    """Unitary ``U: E_1 -> E_2`` with ``J_2 = (1 (x) U) J_1``.

    Solved by least squares over all coefficient blocks, then projected to the
    nearest unitary by the polar decomposition.

    Raises
    ------
    NotMinimal
        one of the dilations has a proper support.
    IrreconcilableDilations
        the best unitary leaves a residual above ``rec_tol``.
    """
    if space1.basis != space2.basis or space1.kernel.a != space2.kernel.a:
        raise DimensionMismatch("dilations must live over the same kernel and truncation")
    for J, sp_ in ((J1, space1), (J2, space2)):
        if not is_minimal(J, sp_):
            raise NotMinimal("dilation is not minimal: its support is a proper subspace")
    r1, r2 = space1.coeff_dim, space2.coeff_dim
    if r1 != r2:
        raise IrreconcilableDilations(f"defect dimensions differ: {r1} vs {r2}")
    n = len(space1.basis)
    X1 = np.transpose((space1.gram_half[:, None] * J1).reshape(n, r1, -1), (1, 0, 2)).reshape(r1, -1)
    X2 = np.transpose((space2.gram_half[:, None] * J2).reshape(n, r2, -1), (1, 0, 2)).reshape(r2, -1)
    U_ls = X2 @ np.linalg.pinv(X1)
    P, _, Qh = np.linalg.svd(U_ls)
    U = P @ Qh
    lifted = np.kron(np.eye(n), U) @ J1
    residual = _op_norm(space2.gram_half[:, None] * (lifted - J2))
    defect = _op_norm(U.conj().T @ U - np.eye(r1))
    if residual > rec_tol:
        raise IrreconcilableDilations(f"no unitary reconciles the dilations: residual {residual:.3e}")
    return DilationComparison(U=U, unitarity_defect=defect, residual=residual)
