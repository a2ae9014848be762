"""Built-in example tuples and seeded random tuple classes.

Corpus entries are named ``"<kernel>_<tuple>"`` (for example ``da_lambda_0.5``).
Each tuple carries a default truncation degree chosen so that the pureness
residual is below ``1e-11`` for every shipped kernel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contraction import OperatorTuple
from .errors import BadParameter
from .series import KernelSpec, builtin_kernel

KERNEL_HORIZON = 200

KERNELS = {
    "da": dict(family="drury_arveson"),
    "k2": dict(family="power", nu=2),
    "khalf": dict(family="power", nu="1/2"),
    "dirichlet": dict(family="dirichlet"),
}


def corpus_kernel(key: str, N: int = 0) -> KernelSpec:
    if key not in KERNELS:
        raise BadParameter(f"unknown corpus kernel {key!r}; choose from {sorted(KERNELS)}")
    return builtin_kernel(max_degree=max(KERNEL_HORIZON, N + 5), **KERNELS[key])


def _jordan(n: int, lam: complex, eps: float) -> np.ndarray:
    return lam * np.eye(n, dtype=complex) + eps * np.eye(n, k=1)


def _unit(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1.0
    return m


def _similar(V: np.ndarray, diag) -> np.ndarray:
    return V @ np.diag(diag) @ np.linalg.inv(V)


_SKEW = np.array([[1.0, 0.4], [0.0, 1.0]])
_SHIFT3 = np.eye(3, k=1)
_SHIFT2 = np.eye(2, k=1)

# name -> (matrices, default N)
TUPLES = {
    "lambda_0.3": ([[[0.3]]], 13),
    "lambda_0.5": ([[[0.5]]], 22),
    "lambda_0.8i": ([[[0.8j]]], 65),
    "jordan_0.4": ([_jordan(2, 0.4, 0.3)], 20),
    "jordan3_0.3": ([_jordan(3, 0.3, 0.3)], 17),
    "zero_d1": (np.zeros((1, 1, 1)), 4),
    "zero_d2": (np.zeros((2, 1, 1)), 4),
    "nilpair_a": ([0.5 * _unit(3, 0, 1), 0.3 * _unit(3, 0, 2)], 6),
    "nilpair_b": ([0.5 * _SHIFT3, 0.3 * _SHIFT3 @ _SHIFT3], 6),
    "nilpair_c": ([0.4 * _SHIFT2, 0.2 * _SHIFT2], 6),
    "diagpair_normal": ([np.diag([0.3, -0.2j]), np.diag([0.1 + 0.2j, 0.35])], 17),
    "diagpair_skew": ([_similar(_SKEW, [0.3, -0.2j]), _similar(_SKEW, [0.1 + 0.2j, 0.35])], 17),
}


@dataclass(frozen=True, eq=False)
class CorpusEntry:
    name: str
    kernel_key: str
    tuple_key: str
    T: OperatorTuple
    N: int

    def kernel(self, N: int | None = None) -> KernelSpec:
        return corpus_kernel(self.kernel_key, self.N if N is None else N)


def corpus_tuple(key: str) -> tuple[OperatorTuple, int]:
    if key not in TUPLES:
        raise BadParameter(f"unknown corpus tuple {key!r}")
    mats, N = TUPLES[key]
    return OperatorTuple(np.asarray(mats, dtype=complex)), N


def entry(name: str) -> CorpusEntry:
    """Look up ``"<kernel>_<tuple>"``."""
    kkey, _, tkey = name.partition("_")
    if kkey not in KERNELS or tkey not in TUPLES:
        raise BadParameter(f"unknown corpus entry {name!r}")
    T, N = corpus_tuple(tkey)
    return CorpusEntry(name, kkey, tkey, T, N)


def entries(kernels=None, tuples=None) -> list:
    """Corpus entries sorted by name; ``None`` selects everything."""
    kernels = sorted(KERNELS) if kernels is None else list(kernels)
    tuples = sorted(TUPLES) if tuples is None else list(tuples)
    return sorted((entry(f"{k}_{t}") for k in kernels for t in tuples), key=lambda e: e.name)


# ---------------------------------------------------------------------------
# random classes

def random_nilpotent_pair(rng: np.random.Generator, size: int = 3, scale: float = 0.5) -> OperatorTuple:
    """Two polynomials without constant term in the ``size x size`` shift, ``||sigma_T(I)|| = scale^2``."""
    if size < 2:
        raise BadParameter("nilpotent pairs need size >= 2")
    S = np.eye(size, k=1)
    mats = []
    for _ in range(2):
        coef = rng.normal(size=size - 1) + 1j * rng.normal(size=size - 1)
        mats.append(sum(c * np.linalg.matrix_power(S, k + 1) for k, c in enumerate(coef)))
    mats = np.array(mats)
    row = np.linalg.norm(np.hstack(list(mats)), 2)
    return OperatorTuple(mats * (scale / row))


def random_diagonalizable(rng: np.random.Generator, d: int = 2, size: int = 2, scale: float = 0.5,
                          skew: float = 0.2) -> OperatorTuple:
    """``T_i = V diag(lambda_i) V^{-1}`` with joint eigenvalues drawn in ``scale * B_d``."""
    if not 0 < scale < 1:
        raise BadParameter("scale must lie in (0, 1)")
    pts = rng.normal(size=(size, d)) + 1j * rng.normal(size=(size, d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= scale * rng.uniform(size=(size, 1)) ** (1.0 / (2 * d))
    V = np.eye(size) + skew * (rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))) / np.sqrt(size)
    return OperatorTuple(np.array([_similar(V, pts[:, i]) for i in range(d)]))


def random_jordan(rng: np.random.Generator, size: int = 2, scale: float = 0.5) -> OperatorTuple:
    """Single Jordan block with eigenvalue in ``scale * D`` and superdiagonal ``min(0.3, (1-scale)/2)``."""
    lam = scale * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
    return OperatorTuple(np.array([_jordan(size, lam, min(0.3, (1 - scale) / 2))]))


RANDOM_CLASSES = {
    "nilpotent_pair": random_nilpotent_pair,
    "diagonalizable": random_diagonalizable,
    "jordan": random_jordan,
}


def random_tuple(cls: str, seed: int, **kw) -> OperatorTuple:
    if cls not in RANDOM_CLASSES:
        raise BadParameter(f"unknown random class {cls!r}; choose from {sorted(RANDOM_CLASSES)}")
    return RANDOM_CLASSES[cls](np.random.default_rng(seed), **kw)
