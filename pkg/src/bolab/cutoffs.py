"""Smooth dyadic cutoff family used for both spatial shells and frequency bands.

The base profile is built from the standard C-infinity bump
``psi(t) = exp(-1/t)`` for ``t > 0`` (zero otherwise) through the smoothstep

    s(t) = psi(t) / (psi(t) + psi(1 - t)),

which rises monotonically from 0 (t <= 0) to 1 (t >= 1).  The half-line base
cutoff is

    base_le(y) = s(2 - y)     # equals 1 for y <= 1, 0 for y >= 2.

Every other member is derived by dyadic rescaling and differences:

    le(j, y)      = base_le(2^-j y)                   (one for y <= 2^j)
    shell(j, y)   = le(j, y) - le(j-1, y)             (supported on [2^{j-1}, 2^{j+1}])
    ge(j, y)      = 1 - le(j-1, y)
    band(a, b, y) = le(b, y) - le(a-1, y)             (sum of shells a..b)
    sim(j, y)     = band(j-10, j+10, y)
    lesssim(j, y) = le(j+10, y)
    gtrsim(j, y)  = ge(j+10, y)

Symmetric (both-sign) and negative-half variants evaluate the half-line
member at |y| and -y respectively.  The very-low-pass member used by the
gauge transformation is ``ll(k, N, y, factor)`` = le(k - factor*N, |y|); the
default factor is 100 and experiments may relax it (the tested property is
support separation from the 2^k band, which callers assert).

Indices may be any real number: members are continuous functions of 2^-j y.

The exact profile is versioned (``CutoffFamily.version``) because measured
constants in every fitted bound depend on it.
"""

from __future__ import annotations

import numpy as np

_TINY = 1e-300


def _bump(t: np.ndarray) -> np.ndarray:
    """exp(-1/t) on t > 0, zero elsewhere; vectorized and overflow-safe."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_deriv(t: np.ndarray) -> np.ndarray:
    """d/dt exp(-1/t) = exp(-1/t)/t^2 on t > 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def smoothstep(t: np.ndarray) -> np.ndarray:
    """Monotone C-infinity ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = _bump(t)
    b = _bump(1.0 - t)
    return a / np.maximum(a + b, _TINY)


def smoothstep_deriv(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = _bump(t)
    b = _bump(1.0 - t)
    ap = _bump_deriv(t)
    bp = _bump_deriv(1.0 - t)
    s = np.maximum(a + b, _TINY)
    return (ap * b + a * bp) / s**2


class CutoffFamily:
    """All dyadic cutoffs derived from one fixed smoothstep profile.

    Instances are stateless; the module-level ``DEFAULT`` is shared.  Every
    method is vectorized over its spatial/frequency argument and accepts a
    real (possibly non-integer) dyadic index.
    """

    version = "smoothstep-exp-1"

    # -- half-line members (arguments may be negative; le == 1 there) --

    def le(self, j: float, y) -> np.ndarray:
        """chi^+_{<=j}: one for y <= 2^j, zero for y >= 2^{j+1}."""
        return smoothstep(2.0 - np.asarray(y, dtype=float) / 2.0**j)

    def le_deriv(self, j: float, y) -> np.ndarray:
        return -smoothstep_deriv(2.0 - np.asarray(y, dtype=float) / 2.0**j) / 2.0**j

    def ge(self, j: float, y) -> np.ndarray:
        """chi^+_{>=j} = 1 - chi^+_{<=j-1}."""
        return 1.0 - self.le(j - 1, y)

    def shell(self, j: float, y) -> np.ndarray:
        """chi^+_j = chi^+_{<=j} - chi^+_{<=j-1}, supported on [2^{j-1}, 2^{j+1}]."""
        return self.le(j, y) - self.le(j - 1, y)

    def shell_deriv(self, j: float, y) -> np.ndarray:
        return self.le_deriv(j, y) - self.le_deriv(j - 1, y)

    def band(self, a: float, b: float, y) -> np.ndarray:
        """chi^+_{[a,b]} = sum of shells a..b = chi^+_{<=b} - chi^+_{<=a-1}."""
        return self.le(b, y) - self.le(a - 1, y)

    def sim(self, j: float, y) -> np.ndarray:
        """chi^+_{~j} = chi^+_{[j-10, j+10]}."""
        return self.band(j - 10, j + 10, y)

    def lesssim(self, j: float, y) -> np.ndarray:
        """chi^+_{<~ j} = chi^+_{<= j+10}."""
        return self.le(j + 10, y)

    def gtrsim(self, j: float, y) -> np.ndarray:
        """chi^+_{>~ j} = chi^+_{>= j+10}."""
        return self.ge(j + 10, y)

    # -- signed / symmetric members --

    def shell_signed(self, j: float, y, sign: str) -> np.ndarray:
        """chi^+_j, chi^-_j (reflected) or chi_j (of |y|) depending on sign."""
        y = np.asarray(y, dtype=float)
        if sign == "+":
            return self.shell(j, y)
        if sign == "-":
            return self.shell(j, -y)
        if sign == "both":
            return self.shell(j, np.abs(y))
        raise ValueError(f"unknown sign {sign!r}")

    def le_abs(self, j: float, y) -> np.ndarray:
        """chi_{<=j}(y) = chi^+_{<=j}(|y|); equals 1 at y = 0."""
        return self.le(j, np.abs(np.asarray(y, dtype=float)))

    def ge_abs(self, j: float, y) -> np.ndarray:
        return self.ge(j, np.abs(np.asarray(y, dtype=float)))

    def shell_abs(self, j: float, y) -> np.ndarray:
        return self.shell(j, np.abs(np.asarray(y, dtype=float)))

    # -- gauge low-pass --

    def ll(self, k: float, order: int, y, factor: float = 100.0) -> np.ndarray:
        """Very-low-pass chi_{<< k} = chi_{<= k - factor*order}(|y|)."""
        return self.le_abs(k - factor * order, y)

    def gtrsim_ll(self, k: float, order: int, y, factor: float = 100.0) -> np.ndarray:
        """Complement 1 - chi_{<< k}."""
        return 1.0 - self.ll(k, order, y, factor)


DEFAULT = CutoffFamily()
