"""Inner loops, compiled with numba when available.

Each kernel exists twice: a plain numpy/python version (``*_py``) and a
``numba.njit`` version of the same loop.  The public names bind to the jitted
variant unless ``KCONTRACT_DISABLE_JIT`` is set to a truthy value or numba
cannot be imported.  ``benchmarks/bench_kernels.py`` times both paths.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("KCONTRACT_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}
USE_JIT = numba is not None and not _DISABLED


# ---------------------------------------------------------------------------
# reciprocal power series (float mode)

def reciprocal_series_py(a):
    a = np.asarray(a, dtype=np.float64)
    c = np.zeros_like(a)
    c[0] = 1.0 / a[0]
    for n in range(1, a.shape[0]):
        acc = 0.0
        for k in range(1, n + 1):
            acc += a[k] * c[n - k]
        c[n] = -acc / a[0]
    return c


# ---------------------------------------------------------------------------
# graded lexicographic ranking of multi-indices

def shift_targets_py(indices):
    """``out[k, i]`` = position of ``indices[k] + e_i``, or -1 when out of range."""
    n, d = indices.shape
    lookup = {tuple(int(v) for v in row): k for k, row in enumerate(indices)}
    out = np.full((n, d), -1, dtype=np.int64)
    for k in range(n):
        row = [int(v) for v in indices[k]]
        for i in range(d):
            row[i] += 1
            out[k, i] = lookup.get(tuple(row), -1)
            row[i] -= 1
    return out


# ---------------------------------------------------------------------------
# monomial evaluation

def monomials_py(points, exponents):
    """Matrix ``V[m, k] = points[m] ** exponents[k]`` (multi-index power)."""
    points = np.asarray(points, dtype=np.complex128)
    exponents = np.asarray(exponents, dtype=np.int64)
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


# ---------------------------------------------------------------------------
# adjoint monomials T^{*alpha}

def adjoint_powers_py(t_star, parent, direction):
    """Products ``T^{*alpha}`` for every index, built along a parent tree.

    ``parent[k]`` is the position of ``alpha_k - e_{direction[k]}`` (``-1`` for
    the zero index).  ``t_star`` has shape ``(d, p, p)``.
    """
    n = parent.shape[0]
    p = t_star.shape[1]
    out = np.empty((n, p, p), dtype=np.complex128)
    for k in range(n):
        if parent[k] < 0:
            out[k] = np.eye(p, dtype=np.complex128)
        else:
            out[k] = t_star[direction[k]] @ out[parent[k]]
    return out


if USE_JIT:
    reciprocal_series_jit = numba.njit(cache=True)(reciprocal_series_py)

    @numba.njit(cache=True)
    def _binom_jit(n, k):
        if k < 0 or n < k:
            return 0
        out = 1
        for i in range(1, k + 1):
            out = out * (n - k + i) // i
        return out

    @numba.njit(cache=True)
    def _rank_jit(alpha):
        d = alpha.shape[0]
        m = 0
        for v in alpha:
            m += v
        r = _binom_jit(m - 1 + d, d) if m > 0 else 0
        rem = m
        for k in range(d - 1):
            parts = d - k - 1
            for v in range(alpha[k]):
                r += _binom_jit(rem - v + parts - 1, parts - 1)
            rem -= alpha[k]
        return r

    @numba.njit(cache=True)
    def shift_targets_jit(indices):
        n, d = indices.shape
        top = 0
        for v in indices[n - 1]:
            top += v
        out = np.full((n, d), -1, dtype=np.int64)
        work = np.empty(d, dtype=np.int64)
        for k in range(n):
            deg = 0
            for i in range(d):
                work[i] = indices[k, i]
                deg += work[i]
            if deg >= top:
                continue
            for i in range(d):
                work[i] += 1
                out[k, i] = _rank_jit(work)
                work[i] -= 1
        return out

    @numba.njit(cache=True)
    def monomials_jit(points, exponents):
        m, d = points.shape
        n = exponents.shape[0]
        out = np.ones((m, n), dtype=np.complex128)
        for s in range(m):
            for k in range(n):
                acc = 1.0 + 0.0j
                for i in range(d):
                    e = exponents[k, i]
                    z = points[s, i]
                    for _ in range(e):
                        acc *= z
                out[s, k] = acc
        return out

    @numba.njit(cache=True)
    def adjoint_powers_jit(t_star, parent, direction):
        n = parent.shape[0]
        p = t_star.shape[1]
        out = np.empty((n, p, p), dtype=np.complex128)
        for k in range(n):
            if parent[k] < 0:
                for a in range(p):
                    for b in range(p):
                        out[k, a, b] = 1.0 if a == b else 0.0
            else:
                src = out[parent[k]]
                left = t_star[direction[k]]
                for a in range(p):
                    for b in range(p):
                        acc = 0.0j
                        for c in range(p):
                            acc += left[a, c] * src[c, b]
                        out[k, a, b] = acc
        return out

    reciprocal_series = reciprocal_series_jit

    def shift_targets(indices):
        return shift_targets_jit(np.ascontiguousarray(indices, dtype=np.int64))

    def monomials(points, exponents):
        return monomials_jit(
            np.ascontiguousarray(points, dtype=np.complex128),
            np.ascontiguousarray(exponents, dtype=np.int64),
        )

    def adjoint_powers(t_star, parent, direction):
        return adjoint_powers_jit(
            np.ascontiguousarray(t_star, dtype=np.complex128),
            np.ascontiguousarray(parent, dtype=np.int64),
            np.ascontiguousarray(direction, dtype=np.int64),
        )
else:
    reciprocal_series = reciprocal_series_py
    shift_targets = shift_targets_py
    monomials = monomials_py
    adjoint_powers = adjoint_powers_py
