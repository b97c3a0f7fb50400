"""Frequency-response primitives for dq-frame network analysis.

Transfer elements are rational functions of s (polynomial coefficients in
descending powers) times an optional pure delay exp(-s*T).  Evaluation is
frequency-domain only; the delay is kept exact, never approximated by a
rational function.  2x2 complex blocks couple the d- and q-axis of one
port at one frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# |den(s)| below this is treated as a pole hit / singular block
_SINGULAR_ABS_TOL = 1e-300


class PoleHitError(ArithmeticError):
    """Rational-part denominator vanished at the evaluation point."""


class SingularBlockError(ValueError):
    """2x2 block has (numerically) zero determinant."""


def _as_coeff_tuple(coeffs) -> tuple[complex, ...]:
    out = tuple(complex(c) for c in coeffs)
    if not out:
        raise ValueError("empty coefficient list")
    # strip leading zeros but keep at least one coefficient
    k = 0
    while k < len(out) - 1 and out[k] == 0:
        k += 1
    return out[k:]


@dataclass(frozen=True)
class TransferElement:
    """Rational transfer element num(s)/den(s) * exp(-s*delay).

    Coefficients are in descending powers of s and may be complex (the
    fundamental-frequency shift produces complex coefficients).  delay is
    in seconds, >= 0.
    """

    num: tuple[complex, ...]
    den: tuple[complex, ...]
    delay: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "num", _as_coeff_tuple(self.num))
        object.__setattr__(self, "den", _as_coeff_tuple(self.den))
        if all(c == 0 for c in self.den):
            raise ValueError("denominator is identically zero")
        if self.delay < 0:
            raise ValueError("delay must be >= 0")

    def __call__(self, s):
        return evaluate(self, s)


def constant(value: complex) -> TransferElement:
    return TransferElement((complex(value),), (1.0,))


def evaluate(tf: TransferElement, s):
    """Evaluate tf at complex s (rad/s). s may be a scalar or ndarray.

    Raises PoleHitError if the denominator magnitude falls below the
    singularity threshold anywhere.
    """
    s = np.asarray(s, dtype=complex)
    den = np.polyval(tf.den, s)
    if np.min(np.abs(den)) < _SINGULAR_ABS_TOL:
        raise PoleHitError(f"denominator ~ 0 at s={s[np.argmin(np.abs(den))] if s.ndim else s}")
    out = np.polyval(tf.num, s) / den
    if tf.delay:
        out = out * np.exp(-s * tf.delay)
    return out if out.ndim else complex(out)


def multiply(a: TransferElement, b: TransferElement) -> TransferElement:
    """Product of two transfer elements; delays add."""
    return TransferElement(
        tuple(np.polymul(a.num, b.num)),
        tuple(np.polymul(a.den, b.den)),
        a.delay + b.delay,
    )


def _shift_poly(coeffs: tuple[complex, ...], a: complex) -> tuple[complex, ...]:
    """Coefficients of p(s + a) given those of p(s), descending powers."""
    n = len(coeffs) - 1
    out = [0j] * (n + 1)
    for k, c in enumerate(coeffs):
        deg = n - k
        for j in range(deg + 1):
            out[n - j] += c * math.comb(deg, j) * a ** (deg - j)
    return tuple(out)


def freq_shift(tf: TransferElement, omega0: float) -> TransferElement:
    """Recompose tf so that the result at s equals tf at s + j*omega0.

    Exact polynomial recomposition (binomial expansion); requires zero
    delay -- a shifted delay factor is a complex scalar times the same
    delay and is handled by the caller.
    """
    if tf.delay != 0.0:
        raise ValueError("freq_shift requires zero delay")
    a = 1j * omega0
    return TransferElement(_shift_poly(tf.num, a), _shift_poly(tf.den, a))


@dataclass(frozen=True)
class DqBlock:
    """2x2 complex block coupling d- and q-axis at one frequency.

    Entries are siemens in an admittance role or ohms in an impedance
    role; the algebra does not care.
    """

    dd: complex
    dq: complex
    qd: complex
    qq: complex

    @classmethod
    def from_array(cls, m) -> "DqBlock":
        m = np.asarray(m, dtype=complex)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def diagonal(cls, value: complex) -> "DqBlock":
        return cls(complex(value), 0j, 0j, complex(value))

    @classmethod
    def zero(cls) -> "DqBlock":
        return cls(0j, 0j, 0j, 0j)

    def as_array(self) -> np.ndarray:
        return np.array([[self.dd, self.dq], [self.qd, self.qq]], dtype=complex)

    def __add__(self, other: "DqBlock") -> "DqBlock":
        return DqBlock(self.dd + other.dd, self.dq + other.dq,
                       self.qd + other.qd, self.qq + other.qq)

    def __matmul__(self, other: "DqBlock") -> "DqBlock":
        return DqBlock.from_array(self.as_array() @ other.as_array())


def block_inverse(b: DqBlock) -> DqBlock:
    """Closed-form 2x2 inverse (adjugate over determinant)."""
    det = b.dd * b.qq - b.dq * b.qd
    if abs(det) < _SINGULAR_ABS_TOL:
        raise SingularBlockError(f"block determinant ~ 0 (|det|={abs(det):.3e})")
    return DqBlock(b.qq / det, -b.dq / det, -b.qd / det, b.dd / det)


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive sweep frequencies plus the fundamental.

    omega0 is the fundamental angular frequency in rad/s (2*pi*50 for the
    50 Hz system the default parameters describe).
    """

    frequencies: tuple[float, ...]
    omega0: float = 2 * math.pi * 50.0

    def __post_init__(self):
        object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        f = self.frequencies
        if not f:
            raise ValueError("empty frequency grid")
        if f[0] <= 0:
            raise ValueError("frequencies must be > 0")
        if any(b <= a for a, b in zip(f, f[1:])):
            raise ValueError("frequencies must be strictly increasing")

    @classmethod
    def regular(cls, fmin: float, fmax: float, df: float,
                omega0: float = 2 * math.pi * 50.0) -> "FrequencyGrid":
        if fmin <= 0 or fmax < fmin or df <= 0:
            raise ValueError("need 0 < fmin <= fmax and df > 0")
        n = int(round((fmax - fmin) / df)) + 1
        return cls(tuple(fmin + k * df for k in range(n)), omega0)

    @property
    def hz(self) -> np.ndarray:
        return np.asarray(self.frequencies)

    def __len__(self) -> int:
        return len(self.frequencies)
