"""Transfer realizations ``W(z) = D + C F(ZT^*) Z B`` and K-inner verification."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contraction import STOP_WINDOW, OperatorTuple, as_tuple, defect_operator
from .dilation import MEM_TOL, F_eval, InnerFunctionPoly, adjoint_range_residual, dilation_matrix
from .errors import DegreeOverflow, DimensionMismatch, KernelSingularity, NotRowContraction, SeriesNotConverged
from .series import KernelSpec
from .space import IndexBasis, SpaceSpec, delta_diagonals, shift_matrices
from . import _kernels


@dataclass(frozen=True, eq=False)
class RealizationQuadruple:
    """``(T, B, C, D)`` with ``B: C^s -> H^d``, ``C: H -> C^r``, ``D: C^s -> C^r``."""

    T: OperatorTuple
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)
    DeltaT: np.ndarray = field(repr=False)

    def __post_init__(self):
        T = as_tuple(self.T)
        object.__setattr__(self, "T", T)
        for name in ("B", "C", "D", "DeltaT"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=complex)))
        d, p = T.d, T.p
        if self.B.shape[0] != d * p:
            raise DimensionMismatch(f"B has {self.B.shape[0]} rows, expected d*p = {d * p}")
        if self.C.shape[1] != p:
            raise DimensionMismatch(f"C has {self.C.shape[1]} columns, expected p = {p}")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise DimensionMismatch(f"D has shape {self.D.shape}, expected {(self.C.shape[0], self.B.shape[1])}")
        if self.DeltaT.shape != (p, p):
            raise DimensionMismatch("DeltaT must be p x p")

    @property
    def source_dim(self) -> int:
        return self.B.shape[1]

    @property
    def target_dim(self) -> int:
        return self.C.shape[0]

    def replace(self, **kw) -> "RealizationQuadruple":
        vals = {k: getattr(self, k) for k in ("T", "B", "C", "D", "DeltaT")}
        vals.update(kw)
        return RealizationQuadruple(**vals)

    def to_json(self) -> dict:
        def enc(M):
            return [[[float(v.real), float(v.imag)] for v in row] for row in M]
        return {"T": self.T.to_json(), "B": enc(self.B), "C": enc(self.C), "D": enc(self.D),
                "DeltaT": enc(self.DeltaT)}


def _op_norm(X) -> float:
    return float(np.linalg.norm(X, 2)) if np.size(X) else 0.0


def check_conditions(q: RealizationQuadruple, kernel: KernelSpec, N: int, defect_op=None,
                     tol: float = 1e-8, mem_tol: float = MEM_TOL) -> dict:
    """Residuals of the four realization conditions.

    ``defect_op`` defaults to ``C^* C`` recomputed from the series of ``T``.
    The range condition is tested on degrees ``<= N-1`` of ``(+)J_C B``.
    """
    T = q.T
    d, p = T.d, T.p
    if defect_op is None:
        defect_op = defect_operator(T, kernel).defect_op
    defect_op = np.asarray(defect_op)
    if defect_op.shape != (p, p):
        raise DimensionMismatch("defect operator must be p x p")
    blockD = np.kron(np.eye(d), q.DeltaT)
    k1 = _op_norm(q.C.conj().T @ q.C - defect_op)
    k2 = _op_norm(q.D.conj().T @ q.C + q.B.conj().T @ blockD @ T.column_adjoint())
    k3 = _op_norm(q.D.conj().T @ q.D + q.B.conj().T @ blockD @ q.B - np.eye(q.source_dim))
    space = SpaceSpec(kernel, IndexBasis(d, N), q.target_dim)
    J = dilation_matrix(T, q.C, space)
    comps = [J @ q.B[i * p:(i + 1) * p] for i in range(d)]
    L = adjoint_range_residual(comps, space)
    k4 = float(np.max(np.linalg.norm(L, axis=0))) if L.size else 0.0
    res = {"K1": k1, "K2": k2, "K3": k3, "K4": k4}
    tols = {"K1": tol, "K2": tol, "K3": tol, "K4": mem_tol}
    return {
        "residuals": res,
        "tolerances": tols,
        "passed": {k: bool(res[k] <= tols[k]) for k in res},
        "all_passed": all(res[k] <= tols[k] for k in res),
        "validated_band": [0, N - 1],
        "commutation_residual": commutation_oracle(q),
    }


def commutation_oracle(q: RealizationQuadruple) -> float:
    """``max_{i,k} ||T_k^* B_i - T_i^* B_k||``: zero exactly when the range condition holds."""
    T = q.T
    d, p = T.d, T.p
    Bi = [q.B[i * p:(i + 1) * p] for i in range(d)]
    return max((_op_norm(T.T_star[k] @ Bi[i] - T.T_star[i] @ Bi[k])
                for i in range(d) for k in range(d)), default=0.0)


def build_W_from_quadruple(q: RealizationQuadruple, kernel: KernelSpec, N: int) -> InnerFunctionPoly:
    """Coefficients of ``D + C F(ZT^*) Z B`` up to total degree ``N``.

    ``W_beta = sum_{i: beta_i >= 1} a_|beta| gamma_{beta - e_i} C T^{*(beta - e_i)} B_i``.
    """
    T = q.T
    d, p = T.d, T.p
    if kernel.max_degree < N:
        raise DegreeOverflow(f"kernel horizon {kernel.max_degree} < N = {N}")
    basis = IndexBasis(d, N)
    parent, direction = basis.parents
    powers = _kernels.adjoint_powers(T.T_star, parent, direction)
    gamma = np.array(basis.gamma, dtype=float)
    a = kernel.a_float
    out = np.zeros((len(basis), q.target_dim, q.source_dim), dtype=complex)
    out[0] = q.D
    targets = basis.shift_targets
    for k in range(len(basis)):
        for i in range(d):
            t = targets[k, i]
            if t < 0:
                continue
            deg = basis.degrees[t]
            out[t] += a[deg] * gamma[k] * (q.C @ powers[k] @ q.B[i * p:(i + 1) * p])
    return InnerFunctionPoly(basis, out)


def pointwise_check(q: RealizationQuadruple, W: InnerFunctionPoly, kernel: KernelSpec, points) -> float:
    """Max ``||W(z) - (D + C F(ZT^*) Z B)(z)||`` over the sample points."""
    d, p = q.T.d, q.T.p
    worst = 0.0
    for z in np.atleast_2d(points):
        ZB = sum(z[i] * q.B[i * p:(i + 1) * p] for i in range(d))
        direct = q.D + q.C @ F_eval(q.T, kernel, z) @ ZB
        worst = max(worst, _op_norm(W(z) - direct))
    return worst


def sample_ball(d: int, count: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform-direction points with modulus uniform in ``[0, radius)``."""
    z = rng.normal(size=(count, d)) + 1j * rng.normal(size=(count, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * (radius * rng.uniform(size=(count, 1)))


def verify_kinner(W: InnerFunctionPoly, kernel: KernelSpec, N: int, tol: float = 1e-8) -> dict:
    """Isometry and shift-orthogonality residuals of ``x -> W x`` inside ``H_K`` truncated at ``N``.

    Orthogonality is tested against ``z^alpha W E_*`` for ``1 <= |alpha| <= N - deg W``.
    """
    deg = W.degree()
    if deg > N:
        raise DegreeOverflow(f"deg W = {deg} exceeds N = {N}")
    space = SpaceSpec(kernel, IndexBasis(W.d, N), W.target_dim)
    cols = W.columns(space)
    gram = space.gram_matrix(cols)
    iso = _op_norm(gram - np.eye(W.source_dim))
    orth = 0.0
    band = N - deg
    if band >= 1:
        shifts, _ = shift_matrices(space)
        words = IndexBasis(W.d, band)
        parent, direction = words.parents
        shifted = [cols]
        for k in range(1, len(words)):
            shifted.append(shifts[direction[k]] @ shifted[parent[k]])
            orth = max(orth, _op_norm(np.conj(cols).T @ (space.gram[:, None] * shifted[k])))
    return {
        "isometry_residual": iso,
        "orthogonality_residual": orth,
        "shift_band": [1, band] if band >= 1 else [],
        "degree": deg,
        "N": N,
        "tolerance": tol,
        "verdict": bool(iso <= tol and orth <= tol),
    }


def row_contraction_norm(kernel: KernelSpec, d: int, N: int) -> float:
    """``||M_z M_z^*||`` on the scalar space truncated at ``N`` (``max a_{n-1}/a_n``)."""
    space = SpaceSpec(kernel, IndexBasis(d, N), 1)
    shifts, adjoints = shift_matrices(space)
    total = sum((m @ a for m, a in zip(shifts, adjoints)))
    return float(np.abs(total.diagonal()).max())


def kernel_value(kernel: KernelSpec, t: complex, series_tol: float = 1e-14) -> complex:
    """``k(t)`` summed until ``STOP_WINDOW`` consecutive terms fall below ``series_tol``."""
    total, run, tn = 0.0 + 0.0j, 0, 1.0 + 0.0j
    for an in kernel.a_float:
        term = an * tn
        total += term
        run = run + 1 if abs(term) < series_tol else 0
        if run >= STOP_WINDOW:
            return total
        tn *= t
    raise SeriesNotConverged(f"k(t) at |t| = {abs(t):.3g} needs more than {kernel.max_degree} terms")


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """``z -> D + C F(ZT^*) Z B`` evaluated through the series of ``F`` (no degree truncation)."""

    q: RealizationQuadruple
    kernel: KernelSpec

    @property
    def d(self) -> int:
        return self.q.T.d

    @property
    def target_dim(self) -> int:
        return self.q.target_dim

    def _one(self, z) -> np.ndarray:
        p = self.q.T.p
        ZB = sum(z[i] * self.q.B[i * p:(i + 1) * p] for i in range(self.d))
        return self.q.D + self.q.C @ F_eval(self.q.T, self.kernel, z) @ ZB

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.ndim == 1:
            return self._one(z)
        return np.array([self._one(row) for row in z])


def da_multiplier_check(W, kernel: KernelSpec, points, strict: bool = True, row_tol: float = 1e-10,
                        row_horizon: int = 64) -> float:
    """Minimal eigenvalue of ``[K(z_i, z_j) I - W(z_i) W(z_j)^* / (1 - <z_i, z_j>)]``.

    A nonnegative value is evidence that ``W`` (an :class:`InnerFunctionPoly` or a
    :class:`TransferFunction`) is a contractive multiplier from the
    Drury-Arveson space into ``H_K``.  With ``strict`` the shift tuple of
    ``H_K`` must be a row contraction on the space truncated at ``row_horizon``.

    Raises
    ------
    KernelSingularity
        some ``<z_i, z_j>`` has modulus ``>= 1``.
    NotRowContraction
        ``strict`` and ``||M_z M_z^*|| > 1 + row_tol``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[1] != W.d:
        raise DimensionMismatch(f"points in C^{pts.shape[1]} for a function of {W.d} variables")
    if strict:
        nrm = row_contraction_norm(kernel, W.d, min(kernel.max_degree, row_horizon))
        if nrm > 1.0 + row_tol:
            raise NotRowContraction(f"||M_z M_z^*|| = {nrm:.6g} > 1 for kernel {kernel.name!r}")
    m = pts.shape[0]
    G = pts @ pts.conj().T                           # <z_i, z_j> = sum z_i conj(z_j)
    if np.any(np.abs(G) >= 1.0):
        raise KernelSingularity("points must satisfy |<z_i, z_j>| < 1")
    vals = W(pts)                                    # (m, r, s)
    r = W.target_dim
    blocks = np.zeros((m * r, m * r), dtype=complex)
    for i in range(m):
        for j in range(m):
            Kij = kernel_value(kernel, G[i, j])
            blk = Kij * np.eye(r) - vals[i] @ vals[j].conj().T / (1.0 - G[i, j])
            blocks[i * r:(i + 1) * r, j * r:(j + 1) * r] = blk
    blocks = 0.5 * (blocks + blocks.conj().T)
    return float(np.linalg.eigvalsh(blocks)[0])


def jc_identity_residual(T, C: np.ndarray, C_alt: np.ndarray, kernel: KernelSpec, N: int) -> float:
    """``||J_C^* G Delta J_C - J_C'^* G Delta J_C'||`` for two factorizations of the defect."""
    T = as_tuple(T)
    vals = []
    for CC in (C, C_alt):
        space = SpaceSpec(kernel, IndexBasis(T.d, N), CC.shape[0])
        J = dilation_matrix(T, CC, space)
        _, big = delta_diagonals(space)
        vals.append(J.conj().T @ ((space.gram * np.repeat(big, CC.shape[0]))[:, None] * J))
    return _op_norm(vals[0] - vals[1])


def isometry_identity_residual(q: RealizationQuadruple, W: InnerFunctionPoly, kernel: KernelSpec,
                               rng: np.random.Generator, samples: int = 5) -> float:
    """Max ``| ||Wx||^2 - ||Dx||^2 - <(I - D^*D)x, x> |`` over random unit ``x``."""
    space = SpaceSpec(kernel, W.basis, W.target_dim)
    cols = W.columns(space)
    worst = 0.0
    for _ in range(samples):
        x = rng.normal(size=q.source_dim) + 1j * rng.normal(size=q.source_dim)
        x /= np.linalg.norm(x)
        lhs = space.norm(cols @ x) ** 2 - np.linalg.norm(q.D @ x) ** 2
        rhs = np.vdot(x, (np.eye(q.source_dim) - q.D.conj().T @ q.D) @ x).real
        worst = max(worst, abs(lhs - rhs))
    return worst
