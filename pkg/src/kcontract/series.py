"""Scalar coefficient calculus for the kernel ``k(t) = sum a_n t^n``.

Coefficients are kept as :class:`fractions.Fraction` whenever the generator
produces rationals, so that the reciprocal identity ``sum_k a_k c_{n-k} = 0``
can be checked exactly.  Anything else is stored as float64.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Rational
from typing import Callable, Sequence, Union

import numpy as np

from . import _kernels
from .errors import BadNormalization, BadParameter, HorizonTooShort, NonpositiveCoefficient

Coefficient = Union[Fraction, float]

# |c_n| below this fraction of max|c| counts as zero in float-mode sign checks
_SIGN_FLOOR = 1e-14


def _coerce(value) -> Coefficient:
    if isinstance(value, bool):
        raise BadParameter("boolean is not a kernel coefficient")
    if isinstance(value, (Integral, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise BadParameter(f"cannot parse coefficient {value!r}") from exc
    return float(value)


def _rational_or_float(x) -> Coefficient:
    """Exact Fraction for 'nice' parameters (0.5, 3, '1/3'), float otherwise."""
    x = _coerce(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise BadParameter(f"non-finite parameter {x}")
        approx = Fraction(x).limit_denominator(10**6)
        if float(approx) == x:
            return approx
    return x


@dataclass(frozen=True)
class KernelSpec:
    """Truncated coefficient data of a unitarily invariant kernel.

    ``a`` and ``c`` hold ``max_degree + 1`` entries each.  When ``exact`` is
    true both are tuples of ``Fraction``.
    """

    a: tuple
    max_degree: int
    c: tuple
    ratio_inf: float
    ratio_sup: float
    r_estimate: float
    name: str = ""
    exact: bool = True
    _a_float: np.ndarray = field(repr=False, compare=False, default=None)
    _c_float: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def a_float(self) -> np.ndarray:
        return self._a_float

    @property
    def c_float(self) -> np.ndarray:
        return self._c_float

    @property
    def F_coefficients(self) -> tuple:
        """Coefficients of ``F(t) = (k(t) - 1) / t``; the n-th entry is ``a_{n+1}``."""
        return self.a[1:]

    @property
    def c_support(self) -> int | None:
        """Largest n with ``c_n != 0`` if the stored tail vanishes, else None.

        A finite support means ``1/k`` is a polynomial within the horizon (as for
        the Drury-Arveson kernel and integer powers of it).
        """
        if self.exact:
            nz = [n for n, v in enumerate(self.c) if v != 0]
        else:
            scale = float(np.max(np.abs(self.c_float)))
            nz = [n for n, v in enumerate(self.c_float) if abs(v) > _SIGN_FLOOR * scale]
        last = nz[-1] if nz else 0
        # a vanishing run shorter than the trailing quarter of the horizon proves nothing
        if self.max_degree - last < max(4, self.max_degree // 4):
            return None
        return last

    def ratio(self, n: int) -> Coefficient:
        """``a_n / a_{n+1}``."""
        return self.a[n] / self.a[n + 1]

    def evaluate(self, t) -> complex:
        """Truncated series ``sum_{n <= max_degree} a_n t^n``."""
        powers = np.asarray(t, dtype=complex) ** np.arange(self.max_degree + 1)
        return complex(np.dot(self.a_float, powers))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "a": [str(v) if isinstance(v, Fraction) else float(v) for v in self.a],
            "max_degree": self.max_degree,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj: dict | str) -> "KernelSpec":
        """Rebuild from ``{name, a, max_degree}``; ``c`` and diagnostics are recomputed."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        return build_kernel(obj["a"], int(obj["max_degree"]), name=obj.get("name", ""))


def reciprocal_coefficients(a: Sequence[Coefficient]) -> list:
    """Taylor coefficients of ``1/k`` via ``c_n = -sum_{k=1..n} a_k c_{n-k}``."""
    if all(isinstance(v, Fraction) for v in a):
        c = [Fraction(1)]
        for n in range(1, len(a)):
            c.append(-sum(a[k] * c[n - k] for k in range(1, n + 1)))
        return c
    return list(_kernels.reciprocal_series(np.array([float(v) for v in a])))


def build_kernel(a_generator: Callable[[int], object] | Sequence, max_degree: int | None = None,
                 name: str = "") -> KernelSpec:
    """Build a :class:`KernelSpec` from a rule ``n -> a_n`` or an explicit list.

    Raises
    ------
    BadNormalization
        ``a_0 != 1``.
    NonpositiveCoefficient
        some ``a_n <= 0``.
    HorizonTooShort
        an explicit list shorter than ``max_degree + 1``.
    """
    if callable(a_generator):
        if max_degree is None:
            raise BadParameter("max_degree is required for a generator rule")
        raw = [a_generator(n) for n in range(max_degree + 1)]
    else:
        raw = list(a_generator)
        if max_degree is None:
            max_degree = len(raw) - 1
        if len(raw) < max_degree + 1:
            raise HorizonTooShort(f"{len(raw)} coefficients given, max_degree={max_degree} needs {max_degree + 1}")
        raw = raw[: max_degree + 1]
    if max_degree < 1:
        raise BadParameter("max_degree must be at least 1")

    vals = [_coerce(v) for v in raw]
    exact = all(isinstance(v, Fraction) for v in vals)
    if not exact:
        vals = [float(v) for v in vals]
    if vals[0] != 1:
        raise BadNormalization(f"a_0 must be 1, got {vals[0]}")
    for n, v in enumerate(vals):
        if not v > 0 or (isinstance(v, float) and not math.isfinite(v)):
            raise NonpositiveCoefficient(f"a_{n} = {v} is not positive")

    c = reciprocal_coefficients(vals)
    a_f = np.array([float(v) for v in vals])
    c_f = np.array([float(v) for v in c])
    ratios = a_f[:-1] / a_f[1:]
    return KernelSpec(
        a=tuple(vals),
        max_degree=max_degree,
        c=tuple(c),
        ratio_inf=float(ratios.min()),
        ratio_sup=float(ratios.max()),
        r_estimate=float(ratios[-1]),
        name=name,
        exact=exact,
        _a_float=a_f,
        _c_float=c_f,
    )


def builtin_kernel(family: str, max_degree: int, nu=None, a=None) -> KernelSpec:
    """One of the shipped kernel families.

    ``family`` is ``"drury_arveson"``, ``"power"`` (needs ``nu > 0``; coefficients
    ``(nu)_n / n!``), ``"dirichlet"`` (``a_n = 1/(n+1)``) or ``"explicit"`` (needs ``a``).
    """
    family = family.lower().replace("-", "_")
    if family in {"drury_arveson", "da"}:
        return build_kernel(lambda n: 1, max_degree, name="drury-arveson")
    if family == "dirichlet":
        return build_kernel(lambda n: Fraction(1, n + 1), max_degree, name="dirichlet")
    if family == "power":
        if nu is None:
            raise BadParameter("power family needs nu")
        nu = _rational_or_float(nu)
        if not nu > 0:
            raise BadParameter(f"nu must be positive, got {nu}")
        coeffs = [Fraction(1) if isinstance(nu, Fraction) else 1.0]
        for n in range(1, max_degree + 1):
            coeffs.append(coeffs[-1] * (nu + n - 1) / n)
        return build_kernel(coeffs, max_degree, name=f"K_nu({nu})")
    if family == "explicit":
        if a is None:
            raise BadParameter("explicit family needs coefficient list a")
        return build_kernel(a, max_degree, name="explicit")
    raise BadParameter(f"unknown kernel family {family!r}")


@dataclass(frozen=True)
class SignReport:
    eventually_nonneg: bool
    eventually_nonpos: bool
    pivot_nonneg: int | None
    pivot_nonpos: int | None
    pivot_index: int | None
    horizon: int
    horizon_limited: bool = True

    def to_json(self) -> dict:
        return dict(self.__dict__)


def nevanlinna_sign_check(spec: KernelSpec) -> SignReport:
    """Look for a one-sign tail ``c_n >= 0`` (or ``<= 0``) for ``p <= n <= max_degree``.

    Only the stored prefix is inspected, so the result is evidence, not proof.
    """
    if spec.exact:
        sign = [(v > 0) - (v < 0) for v in spec.c]
    else:
        floor = _SIGN_FLOOR * float(np.max(np.abs(spec.c_float)))
        sign = [0 if abs(v) <= floor else (1 if v > 0 else -1) for v in spec.c_float]

    def first_pivot(bad: int):
        p = None
        for n in range(spec.max_degree, -1, -1):
            if sign[n] == bad:
                break
            p = n
        return p

    p_nonneg = first_pivot(-1)
    p_nonpos = first_pivot(1)
    candidates = [p for p in (p_nonneg, p_nonpos) if p is not None]
    return SignReport(
        eventually_nonneg=p_nonneg is not None,
        eventually_nonpos=p_nonpos is not None,
        pivot_nonneg=p_nonneg,
        pivot_nonpos=p_nonpos,
        pivot_index=min(candidates) if candidates else None,
        horizon=spec.max_degree,
    )


def essential_normality_diagnostic(spec: KernelSpec) -> np.ndarray:
    """``d_n = a_n/a_{n+1} - a_{n-1}/a_n`` for ``1 <= n < max_degree``."""
    if spec.max_degree < 2:
        raise HorizonTooShort("essential normality diagnostic needs max_degree >= 2")
    return np.array([float(spec.ratio(n) - spec.ratio(n - 1)) for n in range(1, spec.max_degree)])


def cauchy_product(a: Sequence, c: Sequence) -> list:
    """First ``min(len(a), len(c))`` coefficients of the product series."""
    m = min(len(a), len(c))
    return [sum(a[k] * c[n - k] for k in range(n + 1)) for n in range(m)]
