"""Commuting matrix tuples measured against a kernel.

The central object is the defect operator ``(1/K)(T) = sum_n c_n sigma_T^n(I)``
with ``sigma_T(X) = sum_i T_i X T_i^*``.  Positivity of the (truncated) series
decides whether ``T`` is a K-contraction; ``sum_n a_n sigma_T^n((1/K)(T)) -> I``
decides pureness.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, NonCommutingTuple, NotPositive, SeriesNotConverged,
                     SpectralUnsafe)
from .series import KernelSpec

STOP_WINDOW = 5


def _as_matrix_stack(matrices) -> np.ndarray:
    arr = np.asarray(matrices, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise DimensionMismatch(f"expected d square matrices, got shape {arr.shape}")
    return arr


def commutator_residuals(T: np.ndarray) -> np.ndarray:
    """Scaled residuals ``||T_i T_j - T_j T_i|| / max(1, ||T_i|| ||T_j||)``."""
    d = T.shape[0]
    out = np.zeros((d, d))
    norms = [np.linalg.norm(t, 2) for t in T]
    for i in range(d):
        for j in range(i + 1, d):
            res = np.linalg.norm(T[i] @ T[j] - T[j] @ T[i], 2) / max(1.0, norms[i] * norms[j])
            out[i, j] = out[j, i] = res
    return out


@dataclass(frozen=True, eq=False)
class OperatorTuple:
    """``d`` commuting ``p x p`` complex matrices."""

    T: np.ndarray
    comm_tol: float = 1e-10

    def __post_init__(self):
        arr = _as_matrix_stack(self.T)
        arr.setflags(write=False)
        object.__setattr__(self, "T", arr)
        res = commutator_residuals(arr)
        if res.max(initial=0.0) > self.comm_tol:
            i, j = np.unravel_index(np.argmax(res), res.shape)
            raise NonCommutingTuple(
                f"T_{i + 1} and T_{j + 1} do not commute: scaled residual {res[i, j]:.3e} > {self.comm_tol:g}")

    @property
    def d(self) -> int:
        return self.T.shape[0]

    @property
    def p(self) -> int:
        return self.T.shape[1]

    @property
    def T_star(self) -> np.ndarray:
        return np.conj(np.transpose(self.T, (0, 2, 1)))

    def __getitem__(self, i) -> np.ndarray:
        return self.T[i]

    def __iter__(self):
        return iter(self.T)

    def row(self) -> np.ndarray:
        """Row operator ``H^d -> H`` as a ``p x dp`` matrix."""
        return np.hstack(list(self.T))

    def column_adjoint(self) -> np.ndarray:
        """Column operator ``T^*: H -> H^d`` as a ``dp x p`` matrix."""
        return np.vstack(list(self.T_star))

    def Z_adjoint(self, z) -> np.ndarray:
        """``Z T^* = sum_i z_i T_i^*``."""
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.d,):
            raise DimensionMismatch(f"point of shape {z.shape} for a {self.d}-tuple")
        return np.tensordot(z, self.T_star, axes=1)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "p": self.p,
            "matrices": [[[[float(v.real), float(v.imag)] for v in row] for row in m] for m in self.T],
            "comm_tol": self.comm_tol,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj: dict | str) -> "OperatorTuple":
        if isinstance(obj, str):
            obj = json.loads(obj)
        mats = np.array([[[complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in row]
                          for row in m] for m in obj["matrices"]], dtype=complex)
        if mats.shape[0] != obj.get("d", mats.shape[0]) or mats.shape[1] != obj.get("p", mats.shape[1]):
            raise DimensionMismatch("declared d/p disagree with the matrices")
        return cls(mats, float(obj.get("comm_tol", 1e-10)))


def as_tuple(T) -> OperatorTuple:
    return T if isinstance(T, OperatorTuple) else OperatorTuple(T)


def apply_sigma(T, X) -> np.ndarray:
    """``sigma_T(X) = sum_i T_i X T_i^*``."""
    T = as_tuple(T)
    X = np.asarray(X, dtype=complex)
    if X.shape != (T.p, T.p):
        raise DimensionMismatch(f"X has shape {X.shape}, tuple acts on C^{T.p}")
    return np.einsum("iab,bc,idc->ad", T.T, X, np.conj(T.T))


def sigma_orbit(T, X, count: int):
    """Yield ``sigma_T^n(X)`` for ``n = 0 .. count - 1``."""
    cur = np.asarray(X, dtype=complex)
    for _ in range(count):
        yield cur
        cur = apply_sigma(T, cur)


@dataclass(frozen=True)
class SafetyReport:
    max_rho: float
    r_estimate: float
    ok: bool
    rho_sigma: float
    margin: float
    samples: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def sigma_spectral_radius(T, iterations: int = 200) -> float:
    """Power iteration on the map ``sigma_T`` started at the identity."""
    T = as_tuple(T)
    X = np.eye(T.p, dtype=complex)
    growth = []
    for _ in range(iterations):
        Y = apply_sigma(T, X)
        nrm = np.linalg.norm(Y, 2)
        if nrm == 0.0:
            return 0.0
        growth.append(nrm)
        X = Y / nrm
    tail = np.log(growth[iterations // 2:])
    return float(np.exp(tail.mean()))


def spectral_safety(T, kernel: KernelSpec, samples: int = 64, margin: float = 0.05,
                    seed: int = 0) -> SafetyReport:
    """Largest spectral radius of ``Z T^*`` over sampled unit vectors ``z``.

    The coordinate directions are always included.  ``ok`` iff the maximum stays
    below ``r_estimate * (1 - margin)``.
    """
    T = as_tuple(T)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(samples, T.d)) + 1j * rng.normal(size=(samples, T.d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts = np.vstack([np.eye(T.d, dtype=complex), pts])
    rho = max(float(np.max(np.abs(np.linalg.eigvals(T.Z_adjoint(z))))) for z in pts)
    r = kernel.r_estimate
    return SafetyReport(max_rho=rho, r_estimate=r, ok=rho < r * (1.0 - margin),
                        rho_sigma=sigma_spectral_radius(T), margin=margin, samples=samples)


def _phase_fix(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    V = V.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if idx.size:
            ph = col[idx[0]] / abs(col[idx[0]])
            V[:, k] = col / ph
    return V


@dataclass(frozen=True, eq=False)
class DefectResult:
    defect_op: np.ndarray
    series_terms_used: int
    tail_estimate: float
    min_eig: float
    is_contraction: bool
    C: np.ndarray
    defect_dim: int
    basis: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    hermitian_residual: float = 0.0
    pos_tol: float = 0.0
    rank_tol: float = 0.0
    horizon: int = 0
    safety: SafetyReport | None = None
    safety_gated: bool = True

    def to_json(self) -> dict:
        return {
            "defect_op": [[[float(v.real), float(v.imag)] for v in row] for row in self.defect_op],
            "series_terms_used": self.series_terms_used,
            "tail_estimate": self.tail_estimate,
            "min_eig": self.min_eig,
            "is_contraction": self.is_contraction,
            "defect_dim": self.defect_dim,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "hermitian_residual": self.hermitian_residual,
            "pos_tol": self.pos_tol,
            "rank_tol": self.rank_tol,
            "horizon": self.horizon,
            "safety": None if self.safety is None else self.safety.to_json(),
            "safety_gated": self.safety_gated,
        }


def _tail_estimate(last: float, prev: float) -> float:
    if last == 0.0:
        return 0.0
    if prev <= 0.0:
        return float("inf")
    q = last / prev
    return last * q / (1.0 - q) if q < 1.0 else float("inf")


def weighted_sigma_series(T, X, coeffs, series_tol: float, what: str = "series"):
    """``sum_n coeffs[n] sigma_T^n(X)`` with the persistence stopping rule.

    Returns ``(value, terms_used, tail_estimate)``; raises
    :class:`SeriesNotConverged` if ``|coeff_n| ||sigma^n(X)|| < series_tol`` does not
    hold for ``STOP_WINDOW`` consecutive terms before the coefficients run out.
    """
    T = as_tuple(T)
    total = np.zeros((T.p, T.p), dtype=complex)
    run, mags = 0, []
    for n, Xn in enumerate(sigma_orbit(T, X, len(coeffs))):
        cn = coeffs[n]
        mag = abs(cn) * np.linalg.norm(Xn, 2)
        mags.append(mag)
        if cn != 0.0:
            total += cn * Xn
        run = run + 1 if mag < series_tol else 0
        if run >= STOP_WINDOW:
            return total, n + 1, _tail_estimate(mags[-1], mags[-2] if len(mags) > 1 else 0.0)
    raise SeriesNotConverged(
        f"{what}: stop criterion (|term| < {series_tol:g} for {STOP_WINDOW} terms) unmet "
        f"at horizon {len(coeffs) - 1}; last term {mags[-1]:.3e}")


def defect_operator(T, kernel: KernelSpec, series_tol: float = 1e-14, pos_tol_rel: float = 1e-10,
                    rank_tol_rel: float = 1e-10, safety_samples: int = 64,
                    margin: float = 0.05) -> DefectResult:
    """Truncated series value of ``(1/K)(T)`` with its square root factor.

    The spectral safety check gates the series only when ``1/k`` is not a
    polynomial within the kernel horizon; a finite sum needs no convergence
    argument.

    Raises
    ------
    SpectralUnsafe
        the sampled spectral radius of ``Z T^*`` is too close to ``r``.
    SeriesNotConverged
        the stopping rule did not fire before the kernel horizon.
    NotPositive
        the minimal eigenvalue is below ``-pos_tol``; ``T`` is not a K-contraction.
    """
    T = as_tuple(T)
    safety = spectral_safety(T, kernel, samples=safety_samples, margin=margin)
    gated = kernel.c_support is None
    if gated and not safety.ok:
        raise SpectralUnsafe(
            f"max rho(Z T^*) = {safety.max_rho:.4g} not below r_estimate*(1-margin) = "
            f"{safety.r_estimate * (1 - margin):.4g}")

    raw, used, tail = weighted_sigma_series(T, np.eye(T.p), kernel.c_float, series_tol, "defect series")
    herm_res = float(np.linalg.norm(raw - raw.conj().T, 2))
    D = 0.5 * (raw + raw.conj().T)
    evals, evecs = np.linalg.eigh(D)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    scale = float(np.max(np.abs(evals))) if evals.size else 0.0
    pos_tol = pos_tol_rel * scale
    rank_tol = rank_tol_rel * max(float(evals[0]), 0.0)
    min_eig = float(evals[-1])
    keep = evals > rank_tol
    V = _phase_fix(evecs[:, keep])
    C = np.sqrt(evals[keep])[:, None] * V.conj().T
    result = DefectResult(
        defect_op=D, series_terms_used=used, tail_estimate=tail, min_eig=min_eig,
        is_contraction=min_eig >= -pos_tol, C=C, defect_dim=int(keep.sum()), basis=V,
        eigenvalues=evals, hermitian_residual=herm_res, pos_tol=pos_tol, rank_tol=rank_tol,
        horizon=kernel.max_degree, safety=safety, safety_gated=gated,
    )
    if not result.is_contraction:
        err = NotPositive(f"defect operator has eigenvalue {min_eig:.3e} < -{pos_tol:.1e}")
        err.result = result
        raise err
    return result


@dataclass(frozen=True)
class PurenessReport:
    residuals: np.ndarray
    horizon: int

    def is_pure(self, tol: float = 1e-8, slack: float = 1e-13) -> bool:
        """Final residual below ``tol`` and no growth over the last 5 terms."""
        res = self.residuals
        tail = res[-STOP_WINDOW:]
        monotone = bool(np.all(np.diff(tail) <= slack))
        return bool(res[-1] < tol and monotone)

    def to_json(self, tol: float = 1e-8) -> dict:
        return {"final_residual": float(self.residuals[-1]), "terms": int(self.residuals.size),
                "horizon": self.horizon, "tolerance": tol, "pure": self.is_pure(tol)}


def pureness_residuals(T, kernel: KernelSpec, defect: DefectResult, max_terms: int | None = None) -> PurenessReport:
    """Operator-norm residuals ``||I - sum_{n<=N} a_n sigma_T^n((1/K)(T))||`` for ``N = 0..max_terms``."""
    T = as_tuple(T)
    if not defect.is_contraction:
        raise NotPositive("pureness is only defined for K-contractions")
    max_terms = kernel.max_degree if max_terms is None else min(max_terms, kernel.max_degree)
    acc = np.zeros((T.p, T.p), dtype=complex)
    eye = np.eye(T.p)
    out = []
    for n, Xn in enumerate(sigma_orbit(T, defect.defect_op, max_terms + 1)):
        acc += kernel.a_float[n] * Xn
        out.append(np.linalg.norm(eye - acc, 2))
    return PurenessReport(np.array(out), horizon=max_terms)
