"""Truncated complex power series arithmetic.

A series is the coefficient vector (c_0, ..., c_D); every operation agrees
with the formal, untruncated operation on coefficients 0..D. Two
exponentiation engines sit behind one interface: a quadratic-time
derivative recurrence n*E_n = sum_{k=1..n} k*s_k*E_{n-k} (the reference),
and a Newton iteration E <- E*(1 + s - log E) with FFT products that
doubles the accurate degree per round (the fast path). Products switch
from schoolbook to FFT at FFT_CROSSOVER.

Also here: the Parseval power sum sum_n |c_n|^2 r^{2n} (the circle average
of |f(r e^{i theta})|^2 for a polynomial), the proportion of S_N whose
largest cycle is at most m (a coefficient of exp(sum_{k<=m} z^k/k)), and
the r^{-N} exp(sum_{k<=m} r^k/k) majorant for that coefficient.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import PreconditionError

FFT_CROSSOVER = 64        # schoolbook convolution below this length
NEWTON_CROSSOVER = 12288  # 'auto' exp engine: measured dot-recurrence/Newton crossover


class ComplexSeries:
    """Coefficients c_0..c_D of a truncated power series."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if c.size == 0:
            raise ValueError("a series needs at least the constant coefficient")
        self.coeffs = c

    @property
    def degree_bound(self) -> int:
        return self.coeffs.size - 1

    def coefficient(self, n: int) -> complex:
        return complex(self.coeffs[n])

    def __repr__(self):
        return f"ComplexSeries(degree_bound={self.degree_bound})"


def _conv(a: np.ndarray, b: np.ndarray, degree: int) -> np.ndarray:
    """Coefficients 0..degree of the product of coefficient vectors a, b."""
    a = a[: degree + 1]
    b = b[: degree + 1]
    if a.size == 0 or b.size == 0:
        return np.zeros(degree + 1, dtype=np.complex128)
    full = a.size + b.size - 1
    if min(a.size, b.size) < FFT_CROSSOVER:
        prod = np.convolve(a, b)
    else:
        size = 1 << max(full - 1, 1).bit_length()
        prod = np.fft.ifft(np.fft.fft(a, size) * np.fft.fft(b, size))[:full]
    out = np.zeros(degree + 1, dtype=np.complex128)
    keep = min(full, degree + 1)
    out[:keep] = prod[:keep]
    return out


def _inverse(a: np.ndarray, degree: int) -> np.ndarray:
    """Newton inverse of a modulo z^{degree+1}; requires a_0 != 0."""
    inv = np.array([1.0 / a[0]], dtype=np.complex128)
    while inv.size <= degree:
        target = min(2 * inv.size, degree + 1)
        t = -_conv(a, inv, target - 1)
        t[0] += 2.0
        inv = _conv(inv, t, target - 1)
    return inv[: degree + 1]


def _derivative(a: np.ndarray) -> np.ndarray:
    return a[1:] * np.arange(1, a.size)


def _integral(a: np.ndarray) -> np.ndarray:
    out = np.zeros(a.size + 1, dtype=a.dtype)
    out[1:] = a / np.arange(1, a.size + 1)
    return out


def _log(a: np.ndarray, degree: int) -> np.ndarray:
    """Formal log of a modulo z^{degree+1}; requires a_0 = 1."""
    if degree == 0:
        return np.zeros(1, dtype=np.complex128)
    d = _conv(_derivative(a), _inverse(a, degree - 1), degree - 1)
    return _integral(d)[: degree + 1]


_LD = np.clongdouble


def _conv_ld(a: np.ndarray, b: np.ndarray, degree: int) -> np.ndarray:
    """Long-double FFT convolution, used only by the refinement pass."""
    a = a[: degree + 1]
    b = b[: degree + 1]
    if a.size == 0 or b.size == 0:
        return np.zeros(degree + 1, dtype=_LD)
    full = a.size + b.size - 1
    size = 1 << max(full - 1, 1).bit_length()
    prod = np.fft.ifft(np.fft.fft(a, size) * np.fft.fft(b, size))[:full]
    out = np.zeros(degree + 1, dtype=_LD)
    keep = min(full, degree + 1)
    out[:keep] = prod[:keep]
    return out


def _refine_exp(s: np.ndarray, exp: np.ndarray, degree: int) -> np.ndarray:
    """Extended-precision Newton corrections E <- E(1 + s - log E).

    Double-precision Newton leaves a coefficient error dominated by the
    final log evaluation (its derivative product carries n-scaled
    operands); the iteration contracts errors quadratically, so corrective
    steps with long-double products bring the fast engine within ~1e-12 of
    the formal coefficients. Stops as soon as the residual s - log E is
    at rounding level.
    """
    e = exp.astype(_LD)
    for _ in range(3):
        inv = _inverse(e.astype(np.complex128), degree).astype(_LD)
        t = -_conv_ld(e, inv, degree)
        t[0] += 2.0
        inv = _conv_ld(inv, t, degree)
        logarithm = _integral(_conv_ld(_derivative(e), inv, degree - 1))[: degree + 1]
        residual = -logarithm
        keep = min(s.size, degree + 1)
        residual[:keep] += s[:keep]
        residual[0] = 0.0
        scale = 1.0 + float(np.max(np.abs(e)))
        if float(np.max(np.abs(residual))) <= 1e-13 * scale:
            break
        e = e + _conv_ld(e, residual, degree)
    return e.astype(np.complex128)


def _exp_newton(s: np.ndarray, degree: int) -> np.ndarray:
    exp = np.ones(1, dtype=np.complex128)
    while exp.size <= degree:
        target = min(2 * exp.size, degree + 1)
        corr = -_log(exp, target - 1)
        keep = min(s.size, target)
        corr[:keep] += s[:keep]
        corr[0] += 1.0
        exp = _conv(exp, corr, target - 1)
        exp[0] = 1.0
    out = np.zeros(degree + 1, dtype=np.complex128)
    out[: exp.size] = exp[: degree + 1]
    if degree >= 1:
        out = _refine_exp(s, out, degree)
        out[0] = 1.0
    return out


def _exp_recurrence(s: np.ndarray, degree: int) -> np.ndarray:
    # dtype follows the input so the all-real path stays real
    out = np.zeros(degree + 1, dtype=s.dtype)
    out[0] = 1.0
    weighted = np.zeros(degree + 1, dtype=s.dtype)
    keep = min(s.size, degree + 1)
    weighted[:keep] = s[:keep] * np.arange(keep)
    for n in range(1, degree + 1):
        out[n] = np.dot(weighted[1 : n + 1], out[n - 1 :: -1]) / n
    return out


def exp_array(s: np.ndarray, degree: int, engine: str = "auto") -> np.ndarray:
    """exp of a coefficient vector with zero constant term, to `degree`.

    The recurrence engine handles arbitrary inputs at quadratic cost; the
    Newton engine is tuned for inputs whose exponential keeps a moderate
    dynamic range (the chaos inputs X(k) r^k/sqrt(k) do), where it meets
    1e-9 per coefficient through degree 4096 and beyond.
    """
    s = np.asarray(s)
    if s.size and s[0] != 0:
        raise PreconditionError("exp_series requires a zero constant term")
    if engine == "auto":
        engine = "newton" if degree >= NEWTON_CROSSOVER else "recurrence"
    if engine == "recurrence":
        return _exp_recurrence(s, degree)
    if engine == "newton":
        return _exp_newton(np.asarray(s, dtype=np.complex128), degree)
    raise ValueError(f"unknown exp engine {engine!r}")


def multiply(a: ComplexSeries, b: ComplexSeries, degree: int) -> ComplexSeries:
    """Truncated product: coefficient n of a*b for n <= degree."""
    return ComplexSeries(_conv(a.coeffs, b.coeffs, degree))


def exp_series(s: ComplexSeries, degree: int, engine: str = "auto") -> ComplexSeries:
    """Formal exponential of s (which must have zero constant term)."""
    return ComplexSeries(exp_array(s.coeffs, degree, engine))


def parseval_power_sum(f: ComplexSeries, r: float) -> float:
    """sum_n |c_n|^2 r^{2n} = (1/2pi) int |f(r e^{i theta})|^2 dtheta."""
    if not 0.0 < r <= 1.0:
        raise PreconditionError("parseval_power_sum requires 0 < r <= 1")
    c = f.coeffs
    weights = np.abs(c) ** 2 * r ** (2.0 * np.arange(c.size))
    return float(np.sum(weights))


def smooth_partition_weight(total: int, max_part: int) -> float:
    """Weight of partitions of `total` with all parts <= max_part.

    Equals the coefficient of z^total in exp(sum_{k<=max_part} z^k/k),
    i.e. the proportion of permutations in S_total whose longest cycle has
    length at most max_part. All summands are nonnegative, so the float
    recurrence loses no accuracy to cancellation.
    """
    if total < 0 or max_part < 1:
        raise PreconditionError("smooth_partition_weight needs total >= 0, max_part >= 1")
    if total == 0:
        return 1.0
    top = min(max_part, total)
    s = np.zeros(top + 1)
    s[1:] = 1.0 / np.arange(1, top + 1)
    return float(_exp_recurrence(s, total)[total])


def rankin_bound(total: int, max_part: int, r: float) -> float:
    """r^{-total} exp(sum_{k<=max_part} r^k/k).

    An upper bound for smooth_partition_weight(total, max_part) for every
    r > 0, because the generating function has nonnegative coefficients.
    """
    if total < 1 or max_part < 1 or r <= 0:
        raise PreconditionError("rankin_bound needs total >= 1, max_part >= 1, r > 0")
    k = np.arange(1, max_part + 1, dtype=float)
    return float(r ** (-total) * math.exp(float(np.sum(r ** k / k))))
