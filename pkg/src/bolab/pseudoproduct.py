"""Bilinear, cubic and quartic pseudoproducts on the frequency lattice, and
the branch symbols of the quadratic normal-form correction.

A bilinear pseudoproduct with symbol b acts through

    B(f,g)^(xi) = sum_eta b(xi, eta) fhat(xi - eta) ghat(eta) * dxi

with dxi = 2*pi/L the lattice measure (so b == 1 reproduces sqrt(2 pi) f g
exactly for band-limited inputs).  Frequencies outside the grid range are
treated as zero (no circular wrap); callers are expected to keep inputs
inside the dealiasing margins (1/2 Nyquist bilinear, 1/3 cubic, 1/4 quartic).

The normal-form branch symbols implement the closed forms of the quadratic
cancellation.  Two conventions here were derived from scratch and verified numerically to
machine precision:

  * the smooth pieces are difference quotients (chi_k^+(xi) - chi_k^+(xi-eta))
    / (2 eta) etc., evaluated by a mean-value switch near the removable
    singularity;
  * the assembled operator carries the overall normalization -1/sqrt(2 pi)
    forced by the symmetric transform convention (pointwise products carry
    1/sqrt(2 pi) relative to pseudoproduct symbols).

With these, the quadratic generator assembled in ``nf_generator_terms`` sums
to zero at roundoff level, which is the decisive acceptance oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cutoffs import DEFAULT as DEFAULT_CUTOFFS
from .cutoffs import CutoffFamily
from .errors import AliasingWarning
from .grid import ComplexField, Field, Grid
from .spectral import (
    coeffs_of,
    derivative,
    half_project,
    half_projector_values,
    low_pass,
    lp_project,
    multiply,
    require_same_grid,
    samples_of,
    spectral_tail_mass,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)

#: Overall scale of the assembled normal-form bilinear operator.  Pointwise
#: products contribute symbols with a 1/sqrt(2 pi) factor under the symmetric
#: transform convention, and the solved symbol enters with a minus sign.
NF_NORMALIZATION = -1.0 / SQRT_2PI

# dealiasing margins, as fractions of the Nyquist frequency
BILINEAR_MARGIN = 0.5
CUBIC_MARGIN = 1.0 / 3.0
QUARTIC_MARGIN = 0.25


# ---------------------------------------------------------------------------
# symbol containers
# ---------------------------------------------------------------------------


@dataclass
class BilinearSymbol:
    """Symbol b(xi, eta) with optional support hints used to prune lattice sums.

    ``xi_support`` / ``eta_support`` are closed intervals (lo, hi) outside of
    which the symbol vanishes, or None for no restriction.  ``tag`` carries
    the branch label for normal-form symbols.
    """

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    xi_support: tuple[float, float] | None = None
    eta_support: tuple[float, float] | None = None
    tag: str = ""
    k: float | None = None
    order: int | None = None

    def __call__(self, xi, eta) -> np.ndarray:
        return np.asarray(self.fn(xi, eta), dtype=complex)


@dataclass
class CubicSymbol:
    fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    eta_support: tuple[float, float] | None = None
    sigma_support: tuple[float, float] | None = None
    tag: str = ""

    def __call__(self, xi, eta, sigma) -> np.ndarray:
        return np.asarray(self.fn(xi, eta, sigma), dtype=complex)


@dataclass
class QuarticSymbol:
    fn: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    eta_support: tuple[float, float] | None = None
    sigma_support: tuple[float, float] | None = None
    rho_support: tuple[float, float] | None = None
    tag: str = ""

    def __call__(self, xi, eta, sigma, rho) -> np.ndarray:
        return np.asarray(self.fn(xi, eta, sigma, rho), dtype=complex)


def _indices_in(grid: Grid, support: tuple[float, float] | None) -> np.ndarray:
    if support is None:
        return np.arange(grid.n_points)
    lo, hi = support
    return np.nonzero((grid.xi >= lo) & (grid.xi <= hi))[0]


# ---------------------------------------------------------------------------
# lattice applications
# ---------------------------------------------------------------------------


def bilinear_apply(
    sym: BilinearSymbol,
    f: Field | ComplexField,
    g: Field | ComplexField,
    rows: np.ndarray | None = None,
    cols: np.ndarray | None = None,
) -> ComplexField:
    """Apply a bilinear pseudoproduct by the direct O(n^2) lattice sum.

    ``rows``/``cols`` restrict output and eta indices; by default they come
    from the symbol's support hints.  Frequencies falling outside the grid
    contribute zero (zero-extension, not wrap-around).
    """
    grid = require_same_grid(f, g)
    fc = coeffs_of(np.asarray(f.samples), grid)
    gc = coeffs_of(np.asarray(g.samples), grid)
    if rows is None:
        rows = _indices_in(grid, sym.xi_support)
    if cols is None:
        cols = _indices_in(grid, sym.eta_support)
    # drop eta columns with no spectral content; keeps the sum deterministic
    cols = cols[np.abs(gc[cols]) > 0.0]
    out = np.zeros(grid.n_points, dtype=complex)
    if len(rows) and len(cols):
        values = sym(grid.xi[rows][:, None], grid.xi[cols][None, :])
        shift = rows[:, None] - cols[None, :] + grid.n_points // 2
        valid = (shift >= 0) & (shift < grid.n_points)
        fv = np.where(valid, fc[np.clip(shift, 0, grid.n_points - 1)], 0.0)
        out[rows] = (values * fv) @ gc[cols] * grid.dxi
    return ComplexField(grid, samples_of(out, grid))


def cubic_apply(
    sym: CubicSymbol,
    f: Field | ComplexField,
    g: Field | ComplexField,
    h: Field | ComplexField,
    chunk: int = 64,
) -> ComplexField:
    """Apply a cubic pseudoproduct by the direct O(n^3) lattice sum.

    The eta/sigma ranges are pruned by the symbol's support hints; the output
    frequency loop is chunked to bound memory.
    """
    grid = require_same_grid(f, g, h)
    n = grid.n_points
    fc = coeffs_of(np.asarray(f.samples), grid)
    gc = coeffs_of(np.asarray(g.samples), grid)
    hc = coeffs_of(np.asarray(h.samples), grid)
    etas = _indices_in(grid, sym.eta_support)
    sigmas = _indices_in(grid, sym.sigma_support)
    sigmas = sigmas[np.abs(hc[sigmas]) > 0.0]
    out = np.zeros(n, dtype=complex)
    if not (len(etas) and len(sigmas)):
        return ComplexField(grid, samples_of(out, grid))
    # ghat(eta - sigma), shared across output chunks
    shift_ls = etas[:, None] - sigmas[None, :] + n // 2
    valid_ls = (shift_ls >= 0) & (shift_ls < n)
    gmat = np.where(valid_ls, gc[np.clip(shift_ls, 0, n - 1)], 0.0)
    xi_e = grid.xi[etas]
    xi_s = grid.xi[sigmas]
    for start in range(0, n, chunk):
        ms = np.arange(start, min(start + chunk, n))
        values = sym(
            grid.xi[ms][:, None, None], xi_e[None, :, None], xi_s[None, None, :]
        )
        shift_ml = ms[:, None] - etas[None, :] + n // 2
        valid_ml = (shift_ml >= 0) & (shift_ml < n)
        fmat = np.where(valid_ml, fc[np.clip(shift_ml, 0, n - 1)], 0.0)
        out[ms] = np.einsum(
            "mls,ml,ls,s->m", values, fmat, gmat, hc[sigmas], optimize=True
        ) * grid.dxi**2
    return ComplexField(grid, samples_of(out, grid))


def quartic_apply(
    sym: QuarticSymbol,
    f: Field | ComplexField,
    g: Field | ComplexField,
    h: Field | ComplexField,
    k: Field | ComplexField,
    chunk: int = 16,
) -> ComplexField:
    """Apply a quartic pseudoproduct by the direct lattice sum (O(n^4) naive);
    intended for small grids or tightly hinted symbols."""
    grid = require_same_grid(f, g, h, k)
    n = grid.n_points
    fc = coeffs_of(np.asarray(f.samples), grid)
    gc = coeffs_of(np.asarray(g.samples), grid)
    hc = coeffs_of(np.asarray(h.samples), grid)
    kc = coeffs_of(np.asarray(k.samples), grid)
    etas = _indices_in(grid, sym.eta_support)
    sigmas = _indices_in(grid, sym.sigma_support)
    rhos = _indices_in(grid, sym.rho_support)
    rhos = rhos[np.abs(kc[rhos]) > 0.0]
    out = np.zeros(n, dtype=complex)
    if not (len(etas) and len(sigmas) and len(rhos)):
        return ComplexField(grid, samples_of(out, grid))

    def gather(rows, cols, coeff):
        shift = rows[:, None] - cols[None, :] + n // 2
        valid = (shift >= 0) & (shift < n)
        return np.where(valid, coeff[np.clip(shift, 0, n - 1)], 0.0)

    gmat = gather(etas, sigmas, gc)
    hmat = gather(sigmas, rhos, hc)
    for start in range(0, n, chunk):
        ms = np.arange(start, min(start + chunk, n))
        values = sym(
            grid.xi[ms][:, None, None, None],
            grid.xi[etas][None, :, None, None],
            grid.xi[sigmas][None, None, :, None],
            grid.xi[rhos][None, None, None, :],
        )
        fmat = gather(ms, etas, fc)
        out[ms] = np.einsum(
            "mlsr,ml,ls,sr,r->m", values, fmat, gmat, hmat, kc[rhos], optimize=True
        ) * grid.dxi**3
    return ComplexField(grid, samples_of(out, grid))


def leibnitz_check(
    sym: BilinearSymbol, f: Field | ComplexField, g: Field | ComplexField
) -> float:
    """Sup norm of d/dx B(f,g) - B(f',g) - B(f,g'); an exact lattice identity."""
    lhs = derivative(bilinear_apply(sym, f, g))
    rhs = bilinear_apply(sym, derivative(f), g).samples + bilinear_apply(
        sym, f, derivative(g)
    ).samples
    return float(np.max(np.abs(lhs.samples - rhs)))


# ---------------------------------------------------------------------------
# normal-form branch symbols
# ---------------------------------------------------------------------------

VALID_BRANCHES = ("+++", "++-", "+-+", "+--", "-++", "---", "-+-", "--+")
NONZERO_BRANCHES = ("+++", "++-", "+-+")

_MVT_SWITCH = 1e-8  # relative to the band scale 2^k


def _diff_quotient(cutoffs: CutoffFamily, k: float, a, b, den) -> np.ndarray:
    """(chi_k^+(a) - chi_k^+(b)) / (2 den), removable singularity at den = 0
    evaluated as the derivative value chi_k^+'(a) / 2."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    den = np.asarray(den, dtype=float)
    small = np.abs(den) < _MVT_SWITCH * 2.0**k
    safe = np.where(small, 1.0, den)
    value = (cutoffs.shell(k, a) - cutoffs.shell(k, b)) / (2.0 * safe)
    return np.where(small, 0.5 * cutoffs.shell_deriv(k, a), value)


def _complement_ratio(cutoffs: CutoffFamily, k: float, order: int, factor: float, den) -> np.ndarray:
    """(1 - chi_{<< k}(den)) / (2 den); the numerator vanishes identically near 0."""
    den = np.asarray(den, dtype=float)
    numer = cutoffs.gtrsim_ll(k, order, den, factor)
    small = np.abs(den) < 1e-300
    return np.where(small, 0.0, numer / (2.0 * np.where(small, 1.0, den)))


def nf_branch_symbol(
    k: float,
    order: int,
    branch: str,
    cutoffs: CutoffFamily = DEFAULT_CUTOFFS,
    ll_factor: float = 100.0,
) -> BilinearSymbol:
    """Closed-form branch symbol of the quadratic normal-form correction.

    ``branch`` is the sign pattern (e1 e2 e3) of (xi, xi-eta, eta).  All five
    branches with two negative input frequencies or negative output are zero.
    The xi-support hint of the nonzero branches is the 2^k band broadened by
    the gauge low-pass width.
    """
    if branch not in VALID_BRANCHES:
        raise ValueError(f"invalid branch tag {branch!r}")
    if branch not in NONZERO_BRANCHES:
        return BilinearSymbol(
            fn=lambda xi, eta: np.zeros(np.broadcast(xi, eta).shape, dtype=complex),
            tag=branch,
            k=k,
            order=order,
        )
    pad = 2.0 ** (k - ll_factor * order + 1)
    xi_support = (2.0 ** (k - 1) - pad, 2.0 ** (k + 1) + pad)

    if branch == "+++":

        def fn(xi, eta):
            xi = np.asarray(xi, dtype=float)
            eta = np.asarray(eta, dtype=float)
            shell = cutoffs.shell(k, xi)
            return (
                cutoffs.ll(k, order, eta, ll_factor)
                * _diff_quotient(cutoffs, k, xi, xi - eta, eta)
                + shell * _complement_ratio(cutoffs, k, order, ll_factor, eta)
                + cutoffs.ll(k, order, xi - eta, ll_factor)
                * _diff_quotient(cutoffs, k, xi, eta, xi - eta)
                + shell * _complement_ratio(cutoffs, k, order, ll_factor, xi - eta)
            )

    elif branch == "++-":

        def fn(xi, eta):
            xi = np.asarray(xi, dtype=float)
            eta = np.asarray(eta, dtype=float)
            return cutoffs.shell(k, xi) * _complement_ratio(
                cutoffs, k, order, ll_factor, eta
            ) + cutoffs.ll(k, order, eta, ll_factor) * _diff_quotient(
                cutoffs, k, xi, xi - eta, eta
            )

    else:  # "+-+" by the reflection eta -> xi - eta of "++-"

        ppm = nf_branch_symbol(k, order, "++-", cutoffs, ll_factor)

        def fn(xi, eta):
            xi = np.asarray(xi, dtype=float)
            eta = np.asarray(eta, dtype=float)
            return ppm.fn(xi, xi - eta)

    return BilinearSymbol(fn=fn, xi_support=xi_support, tag=branch, k=k, order=order)


# cached branch value tables, keyed by everything the values depend on
_branch_cache: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _branch_table(grid: Grid, k: float, order: int, branch: str, ll_factor: float,
                  cutoffs: CutoffFamily):
    """(rows, cols, values) of a branch symbol on its pruned lattice window.

    Row pruning uses the xi support hint intersected with xi > 0 (the output
    half-line projection); column pruning uses the sign of eta demanded by the
    branch plus the reachability constraint through the projected first input.
    """
    key = (grid.n_points, grid.box_length, k, order, branch, ll_factor, cutoffs.version)
    if key in _branch_cache:
        return _branch_cache[key]
    sym = nf_branch_symbol(k, order, branch, cutoffs, ll_factor)
    lo, hi = sym.xi_support
    rows = np.nonzero((grid.xi > 0) & (grid.xi >= lo) & (grid.xi <= hi))[0]
    if branch == "+++":
        # eta > 0 and xi - eta > 0 jointly force eta < max xi
        cols = np.nonzero((grid.xi > 0) & (grid.xi < hi))[0]
    elif branch == "+-+":
        # xi - eta < 0 allows eta above the band; zero-extension of the first
        # input handles the upper range
        cols = np.nonzero(grid.xi > 0)[0]
    else:  # "++-"
        cols = np.nonzero(grid.xi < 0)[0]
    values = sym(grid.xi[rows][:, None], grid.xi[cols][None, :])
    _branch_cache[key] = (rows, cols, values)
    return _branch_cache[key]


def assemble_B(
    k: float,
    order: int,
    f: Field | ComplexField,
    g: Field | ComplexField,
    ll_factor: float = 100.0,
    cutoffs: CutoffFamily = DEFAULT_CUTOFFS,
) -> ComplexField:
    """The quadratic normal-form correction B_k(f, g).

    Sums the three nonzero branches with half-line projections on the inputs
    and on the (positive-frequency) output, scaled by ``NF_NORMALIZATION``.
    """
    grid = require_same_grid(f, g)
    plus_f = half_projector_values(grid, "+")
    minus_f = half_projector_values(grid, "-")
    fc = coeffs_of(np.asarray(f.samples), grid)
    gc = coeffs_of(np.asarray(g.samples), grid)
    out = np.zeros(grid.n_points, dtype=complex)
    inputs = {"+++": (plus_f, plus_f), "++-": (plus_f, minus_f), "+-+": (minus_f, plus_f)}
    n = grid.n_points
    for branch in NONZERO_BRANCHES:
        rows, cols, values = _branch_table(grid, k, order, branch, ll_factor, cutoffs)
        pf, pg = inputs[branch]
        fcp = pf * fc
        gcp = pg * gc
        live = np.abs(gcp[cols]) > 0.0
        if not np.any(live):
            continue
        c = cols[live]
        shift = rows[:, None] - c[None, :] + n // 2
        valid = (shift >= 0) & (shift < n)
        fv = np.where(valid, fcp[np.clip(shift, 0, n - 1)], 0.0)
        out[rows] += (values[:, live] * fv) @ gcp[c] * grid.dxi
    # output rows are already restricted to xi > 0: P^+ is built in
    return ComplexField(grid, samples_of(NF_NORMALIZATION * out, grid))


# ---------------------------------------------------------------------------
# the cancellation oracle
# ---------------------------------------------------------------------------


def check_dealias_margin(u: Field | ComplexField, fraction: float = QUARTIC_MARGIN) -> None:
    """Warn when the spectrum carries mass beyond the requested margin."""
    tail = spectral_tail_mass(u, fraction)
    scale = max(np.max(np.abs(np.asarray(u.samples))), 1e-300)
    if tail > 1e-12 * scale:
        warnings.warn(
            f"spectral tail beyond {fraction:.2f}*Nyquist has mass {tail:.2e}; "
            "multilinear lattice sums may alias",
            AliasingWarning,
            stacklevel=3,
        )


def nf_generator_terms(
    u: Field | ComplexField,
    k: float,
    order: int,
    ll_factor: float = 100.0,
    cutoffs: CutoffFamily = DEFAULT_CUTOFFS,
) -> dict[str, ComplexField]:
    """The six terms of the quadratic generator whose sum must vanish.

    (H + i) is realized as 2i P^- (identical off the mean, which every term
    kills through an x-derivative).
    """
    check_dealias_margin(u)
    grid = u.grid
    u_ll = low_pass(u, k - ll_factor * order, cutoffs)
    u_kp = lp_project(u, k, "plus", cutoffs)
    du = derivative(u)
    hpi_ddu = ComplexField(grid, 2j * half_project(derivative(u, 2), "-").samples)

    usq = multiply(u, u)
    t_transport = ComplexField(
        grid, -1j * lp_project(derivative(usq), k, "plus", cutoffs).samples
    )
    t_gauge_h = ComplexField(
        grid, 2j * half_project(derivative(u_ll), "-").samples * u_kp.samples
    )
    t_gauge_d = ComplexField(grid, 2j * u_ll.samples * derivative(u_kp).samples)
    t_b_left = ComplexField(
        grid, 1j * assemble_B(k, order, hpi_ddu, u, ll_factor, cutoffs).samples
    )
    t_b_right = ComplexField(
        grid, 1j * assemble_B(k, order, u, hpi_ddu, ll_factor, cutoffs).samples
    )
    t_b_deriv = ComplexField(
        grid, -2.0 * assemble_B(k, order, du, du, ll_factor, cutoffs).samples
    )
    return {
        "transport": t_transport,
        "gauge_hilbert": t_gauge_h,
        "gauge_derivative": t_gauge_d,
        "b_left": t_b_left,
        "b_right": t_b_right,
        "b_derivative": t_b_deriv,
    }


def verify_nf_cancellation(
    u: Field | ComplexField,
    k: float,
    order: int,
    ll_factor: float = 100.0,
    cutoffs: CutoffFamily = DEFAULT_CUTOFFS,
) -> float:
    """Sup norm of the assembled quadratic generator; zero when the branch
    symbols solve the cancellation equation."""
    terms = nf_generator_terms(u, k, order, ll_factor, cutoffs)
    total = sum(t.samples for t in terms.values())
    return float(np.max(np.abs(total)))


def nf_cancellation_scale(terms: dict[str, ComplexField]) -> float:
    """Reference scale for the cancellation residual: the largest single term."""
    return max(t.sup_norm() for t in terms.values())
