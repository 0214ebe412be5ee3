"""Direct quadrature of the space/frequency-localized propagator kernels and
log-log decay-exponent fitting.

Each kernel has the form

    K(x, y) = (i^a / 2 pi) * chi_j^+(x) * src(y) * I(x, y),
    I = integral of exp(i phi(xi)) * cut(xi) * xi^a d xi,
    phi = xi (x - y + t) + t |xi| xi          (drifting unidirectional flow)

with variant-dependent frequency cutoff and source region:

    lowfreq-left   cut = chi_{<= k0}(|xi|),  src = chi^+_{<= j-10}(y),
                   k0 = -(1 - eps)/2 * j
    dyadic-left    cut = chi_k(|xi|),        src = chi^+_{<= j-10}(y)
    lowfreq-right  cut = chi_{<= k0},        src = chi^+_ell(y),  t > 2^(ell+10)
    dyadic-right   cut = chi_k,              src = chi^+_ell(y),
                   t > 2^(ell+10) / <2^k>
    schro-left/right   cut = chi^+_k(xi) (positive half-line only),
                   phase xi (x - y + t) + t xi^2

On xi > 0 the drifting phase equals the Schroedinger-with-drift phase, which
is the reduction identity checked to quadrature accuracy.

The left-variant source region sits strictly left of the measurement shell
(chi^+_{<= j-10}); on it the phase is nonstationary, d phi / d xi =
(x - y + t) + 2 t |xi| > 0, which is what produces the decay exponents.

Oscillatory integrals are evaluated by adaptive Gauss-Kronrod panels
(QUADPACK) split at xi = 0 where the phase curvature jumps; non-convergence
is flagged on the result and never silent.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from .cutoffs import DEFAULT as DEFAULT_CUTOFFS
from .cutoffs import CutoffFamily
from .errors import DegenerateSeriesError, KernelDomainError, QuadratureWarning

LEFT_VARIANTS = ("lowfreq-left", "dyadic-left", "schro-left")
RIGHT_VARIANTS = ("lowfreq-right", "dyadic-right", "schro-right")
VARIANTS = LEFT_VARIANTS + RIGHT_VARIANTS

#: subdivision cap for one adaptive quadrature panel tree
MAX_PANELS = 2**16


@dataclass
class KernelSpec:
    """Parameters of one localized-kernel evaluation.

    j is the measurement shell, a the derivative count, t the elapsed time.
    Low-frequency variants use k0 = -(1 - epsilon)/2 * j; dyadic and
    Schroedinger variants use the band index k.  Right-moving variants need a
    source shell ell > j - 10 and a time above the crossing threshold.
    """

    variant: str
    j: float
    t: float
    a: int = 0
    epsilon: float = 0.5
    k: float | None = None
    ell: float | None = None
    M: int = 6  # reported alongside right-variant fits; not used in evaluation
    quad_tol: float = 1e-10
    quad_limit: int = 20000
    cutoffs: CutoffFamily = field(default_factory=lambda: DEFAULT_CUTOFFS)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise KernelDomainError(f"unknown variant {self.variant!r}")
        if self.j < 0:
            raise KernelDomainError("shell index j must be nonnegative")
        if not (0.0 < self.epsilon < 1.0):
            raise KernelDomainError("epsilon must lie in (0, 1)")
        if self.t < 0:
            raise KernelDomainError("time must be nonnegative")
        if self.quad_limit > MAX_PANELS:
            raise KernelDomainError(f"quad_limit exceeds the panel cap {MAX_PANELS}")
        dyadic = self.variant.startswith(("dyadic", "schro"))
        if dyadic and self.k is None:
            raise KernelDomainError(f"variant {self.variant} requires a band index k")
        if self.variant in RIGHT_VARIANTS:
            if self.ell is None:
                raise KernelDomainError("right-moving variants require a source shell ell")
            if not self.ell > self.j - 10:
                raise KernelDomainError("right-moving variants require ell > j - 10")
            if self.t <= self.time_threshold():
                raise KernelDomainError(
                    f"t = {self.t:.4g} below the admissible threshold "
                    f"{self.time_threshold():.4g} for {self.variant}"
                )

    @property
    def k0(self) -> float:
        return -(1.0 - self.epsilon) / 2.0 * self.j

    def time_threshold(self) -> float:
        if self.variant not in RIGHT_VARIANTS:
            return 0.0
        thresh = 2.0 ** (self.ell + 10)
        if self.variant in ("dyadic-right", "schro-right"):
            thresh /= math.sqrt(1.0 + 4.0**self.k)  # japanese bracket <2^k>
        return thresh

    # -- geometry --

    def frequency_cutoff(self) -> Callable[[np.ndarray], np.ndarray]:
        c = self.cutoffs
        if self.variant.startswith("lowfreq"):
            return lambda xi: c.le_abs(self.k0, xi)
        if self.variant.startswith("dyadic"):
            return lambda xi: c.shell_abs(self.k, xi)
        return lambda xi: c.shell(self.k, xi)  # schro: positive half-line band

    def frequency_range(self) -> tuple[float, float]:
        if self.variant.startswith("lowfreq"):
            r = 2.0 ** (self.k0 + 1)
            return (-r, r)
        hi = 2.0 ** (self.k + 1)
        lo = 2.0 ** (self.k - 1)
        if self.variant.startswith("schro"):
            return (lo, hi)
        return (-hi, hi)

    def phase(self, xi: np.ndarray, x: float, y: float) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.variant.startswith("schro"):
            return xi * (x - y + self.t) + self.t * xi**2
        return xi * (x - y + self.t) + self.t * np.abs(xi) * xi

    def phase_derivative(self, xi: np.ndarray, x: float, y: float) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.variant.startswith("schro"):
            return (x - y + self.t) + 2.0 * self.t * xi
        return (x - y + self.t) + 2.0 * self.t * np.abs(xi)

    def source_cutoff(self, y) -> np.ndarray:
        if self.variant in LEFT_VARIANTS:
            return np.asarray(self.cutoffs.le(self.j - 10, y), dtype=float)
        return np.asarray(self.cutoffs.shell(self.ell, y), dtype=float)

    def source_window(self) -> tuple[float, float]:
        """Sampling window for y; the sup lives near the right edge of the source."""
        if self.variant in LEFT_VARIANTS:
            return (-(2.0 ** (self.j + 1)), 2.0 ** (self.j - 9))
        return (2.0 ** (self.ell - 1), 2.0 ** (self.ell + 1))

    def shell_window(self) -> tuple[float, float]:
        return (2.0 ** (self.j - 1), 2.0 ** (self.j + 1))


@dataclass
class QuadResult:
    value: complex
    error: float
    converged: bool


def _complex_quad(f: Callable[[float], complex], a: float, b: float,
                  epsabs: float, limit: int) -> QuadResult:
    """Adaptive Gauss-Kronrod quadrature of a complex integrand on [a, b]."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out_r = quad(lambda x: f(x).real, a, b, epsabs=epsabs, epsrel=0.0,
                     limit=limit, full_output=True)
        out_i = quad(lambda x: f(x).imag, a, b, epsabs=epsabs, epsrel=0.0,
                     limit=limit, full_output=True)
    # QUADPACK appends a message beyond (value, abserr, infodict) on failure
    ok = len(out_r) <= 3 and len(out_i) <= 3
    return QuadResult(
        value=out_r[0] + 1j * out_i[0],
        error=out_r[1] + out_i[1],
        converged=ok,
    )


def phase_integral(
    spec: KernelSpec,
    x: float,
    y: float,
    cutoff_override: Callable[[np.ndarray], np.ndarray] | None = None,
    range_override: tuple[float, float] | None = None,
) -> QuadResult:
    """The oscillatory integral  int exp(i phi) cut(xi) xi^a dxi.

    Split at xi = 0 where the phase curvature jumps; absolute tolerance is
    quad_tol times the integrand scale.  Non-convergence warns and flags the
    result (never silent).
    """
    cut = cutoff_override if cutoff_override is not None else spec.frequency_cutoff()
    lo, hi = range_override if range_override is not None else spec.frequency_range()

    def integrand(xi: float) -> complex:
        c = float(cut(np.asarray(xi)))
        if c == 0.0:
            return 0.0 + 0.0j
        return np.exp(1j * spec.phase(np.asarray(xi), x, y)) * c * xi**spec.a

    # integrand scale from the non-oscillatory magnitude
    grid = np.linspace(lo, hi, 257)
    scale = float(np.max(np.abs(cut(grid) * grid**spec.a)) * (hi - lo))
    epsabs = max(spec.quad_tol * max(scale, 1e-300), 1e-300)

    total = 0.0 + 0.0j
    err = 0.0
    ok = True
    pieces = [(lo, 0.0), (0.0, hi)] if lo < 0.0 < hi else [(lo, hi)]
    for a_, b_ in pieces:
        if a_ >= b_:
            continue
        res = _complex_quad(integrand, a_, b_, epsabs, spec.quad_limit)
        total += res.value
        err += res.error
        ok = ok and res.converged
    if not ok:
        warnings.warn(
            f"quadrature did not converge for {spec.variant} at (x={x:.3g}, y={y:.3g}, "
            f"t={spec.t:.3g}); value is an estimate",
            QuadratureWarning,
            stacklevel=2,
        )
    return QuadResult(value=total, error=err, converged=ok)


def kernel_value(spec: KernelSpec, x: float, y: float) -> QuadResult:
    """Full localized kernel K(x, y) including spatial cutoffs and i^a/2pi."""
    pre = (
        (1j**spec.a / (2.0 * np.pi))
        * float(spec.cutoffs.shell(spec.j, np.asarray(x, dtype=float)))
        * float(spec.source_cutoff(np.asarray(y, dtype=float)))
    )
    if pre == 0.0:
        return QuadResult(value=0.0 + 0.0j, error=0.0, converged=True)
    inner = phase_integral(spec, x, y)
    return QuadResult(value=pre * inner.value, error=abs(pre) * inner.error,
                      converged=inner.converged)


@dataclass
class SupResult:
    sup: float
    arg_x: float
    arg_y: float
    nx: int
    ny: int
    all_converged: bool


def kernel_sup(spec: KernelSpec, nx: int = 9, ny: int = 9) -> SupResult:
    """Max of |K| over an (nx, ny) sample grid of the declared support regions."""
    x_lo, x_hi = spec.shell_window()
    y_lo, y_hi = spec.source_window()
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(y_lo, y_hi, ny)
    best = -1.0
    bx = by = 0.0
    ok = True
    for x in xs:
        for y in ys:
            res = kernel_value(spec, float(x), float(y))
            ok = ok and res.converged
            mag = abs(res.value)
            if mag > best:
                best, bx, by = mag, float(x), float(y)
    return SupResult(sup=best, arg_x=bx, arg_y=by, nx=nx, ny=ny, all_converged=ok)


# ---------------------------------------------------------------------------
# sweeps and fitting
# ---------------------------------------------------------------------------


@dataclass
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_decay(pairs: Sequence[tuple[float, float]]) -> FitResult:
    """Least squares of log2(sup) against the parameter (use log2 t for time
    sweeps).  Requires at least four points with positive values."""
    if len(pairs) < 4:
        raise DegenerateSeriesError(f"need at least 4 points, got {len(pairs)}")
    params = np.array([p for p, _ in pairs], dtype=float)
    values = np.array([v for _, v in pairs], dtype=float)
    if np.any(values <= 0.0):
        raise DegenerateSeriesError("all sup values must be positive for a log fit")
    logs = np.log2(values)
    slope, intercept = np.polyfit(params, logs, 1)
    pred = slope * params + intercept
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - np.mean(logs)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(slope=float(slope), intercept=float(intercept),
                     r_squared=r2, n_points=len(pairs))


def sweep_t(spec: KernelSpec, times: Iterable[float], nx: int = 9, ny: int = 9) -> list[dict]:
    """Kernel sup over a time sweep; rows carry (log2 t, sup) for fitting."""
    rows = []
    for t in times:
        s = replace(spec, t=float(t))
        res = kernel_sup(s, nx=nx, ny=ny)
        rows.append(_row(s, res))
    return rows


def sweep_j(spec: KernelSpec, js: Iterable[float], nx: int = 9, ny: int = 9) -> list[dict]:
    """Kernel sup over a shell sweep at fixed time."""
    rows = []
    for j in js:
        s = replace(spec, j=float(j))
        res = kernel_sup(s, nx=nx, ny=ny)
        rows.append(_row(s, res))
    return rows


def _row(spec: KernelSpec, res: SupResult) -> dict:
    return {
        "variant": spec.variant,
        "j": spec.j,
        "k": spec.k if spec.k is not None else spec.k0,
        "a": spec.a,
        "ell": spec.ell if spec.ell is not None else "",
        "t": spec.t,
        "sup": res.sup,
        "quad_flag": 0 if res.all_converged else 1,
    }


def rows_to_csv(rows: list[dict], path: str) -> None:
    fields = ["variant", "j", "k", "a", "ell", "t", "sup", "quad_flag"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({f: row[f] for f in fields})
