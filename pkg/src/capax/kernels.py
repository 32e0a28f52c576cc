"""Riesz and Bessel kernel tables on offset lattices, with singular-cell correction.

The singular cell (offset 0) stores the exact average of the local power-law
singularity over the cell, obtained by replacing the cell with the ball of
equal volume and integrating radially in closed form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma as gamma_fn

from .convolve import wrap_from_centered
from .grid import Grid

__all__ = [
    "riesz_gamma",
    "KernelTable",
    "riesz_kernel_table",
    "bessel_kernel_table",
    "BesselRadialProfile",
    "bessel_radial_profile",
    "export_radial_csv",
]


def riesz_gamma(n: int, alpha: float) -> float:
    """Normalizing constant of the fractional kernel |x|^(alpha-n)."""
    if not 0 < alpha < n:
        raise ValueError(f"need 0 < alpha < n, got alpha={alpha}, n={n}")
    return float(
        gamma_fn((n - alpha) / 2.0) / (np.pi ** (n / 2.0) * 2.0**alpha * gamma_fn(alpha / 2.0))
    )


def unit_ball_volume(n: int) -> float:
    return float(np.pi ** (n / 2.0) / gamma_fn(n / 2.0 + 1.0))


def unit_sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n=1)."""
    return n * unit_ball_volume(n)


def singular_cell_average(n: int, alpha: float, h: float) -> float:
    """Cell average of gamma(n,alpha)|y|^(alpha-n) over the cell at the origin.

    The cell is replaced by the ball of equal volume h^n, radius
    rho = h / v_n^(1/n); the radial integral is closed-form.
    """
    rho = h / unit_ball_volume(n) ** (1.0 / n)
    integral = unit_sphere_area(n) * rho**alpha / alpha
    return riesz_gamma(n, alpha) * integral / h**n


@dataclass(frozen=True)
class KernelTable:
    """Kernel values on the offset lattice {k h, |k| <= N-1}^dim (doubled extent)."""

    grid: Grid
    values: np.ndarray
    alpha: float
    kind: str

    def __post_init__(self):
        expect = (2 * self.grid.points_per_axis - 1,) * self.grid.dim
        if self.values.shape != expect:
            raise ValueError(f"kernel table shape {self.values.shape}, expected {expect}")
        self.values.flags.writeable = False

    @cached_property
    def offset_radii(self) -> np.ndarray:
        N, h = self.grid.points_per_axis, self.grid.spacing
        ax = (np.arange(2 * N - 1) - (N - 1)) * h
        grids = np.meshgrid(*([ax] * self.grid.dim), indexing="ij")
        return np.sqrt(sum(g**2 for g in grids))

    @cached_property
    def padded_rfft(self) -> np.ndarray:
        """Cached real FFT of the wrap-around layout (period 2N per axis)."""
        shape = (2 * self.grid.points_per_axis,) * self.grid.dim
        axes = tuple(range(self.grid.dim))
        return np.fft.rfftn(wrap_from_centered(self.values), s=shape, axes=axes)


def _offset_radii(grid: Grid) -> np.ndarray:
    N, h = grid.points_per_axis, grid.spacing
    ax = (np.arange(2 * N - 1) - (N - 1)) * h
    grids = np.meshgrid(*([ax] * grid.dim), indexing="ij")
    return np.sqrt(sum(g**2 for g in grids))


@lru_cache(maxsize=64)
def riesz_kernel_table(grid: Grid, alpha: float) -> KernelTable:
    n = grid.dim
    if not 0 < alpha < n:
        raise ValueError(f"need 0 < alpha < n, got alpha={alpha}, n={n}")
    r = _offset_radii(grid)
    center = (grid.points_per_axis - 1,) * n
    with np.errstate(divide="ignore"):
        vals = riesz_gamma(n, alpha) * r ** (alpha - n)
    vals[center] = singular_cell_average(n, alpha, grid.spacing)
    return KernelTable(grid, vals, alpha, "riesz")


# -- Bessel kernel -------------------------------------------------------------
#
# Radial profile from the heat subordination representation
#   G_a(x) = (4 pi)^(-a/2) Gamma(a/2)^(-1)
#            * int_0^inf exp(-pi |x|^2 / t) exp(-t/(4 pi)) t^((a-n)/2 - 1) dt.
# The substitution t = 2 pi R e^v turns the exponent into -R cosh(v), which the
# adaptive quadrature resolves on a finite symmetric window.

_BESSEL_EPSREL = 1e-8
_BESSEL_CACHE_SIZE = 1024


def _bessel_radial_value(n: int, alpha: float, R: float) -> float:
    nu = (n - alpha) / 2.0
    # beyond v_max the integrand is below exp(-R - 740) relative to its peak
    v_max = float(np.arccosh(1.0 + 740.0 / R))

    def integrand(v):
        return np.exp(-R * np.cosh(v)) * 2.0 * np.cosh(nu * v)

    val, _ = quad(integrand, 0.0, v_max, epsabs=0.0, epsrel=_BESSEL_EPSREL, limit=200)
    pref = (4.0 * np.pi) ** (-alpha / 2.0) / gamma_fn(alpha / 2.0)
    return float(pref * (2.0 * np.pi * R) ** ((alpha - n) / 2.0) * val)


@dataclass(frozen=True)
class BesselRadialProfile:
    """Log-spaced radial cache of the Bessel kernel with monotone interpolation."""

    n: int
    alpha: float
    radii: np.ndarray
    values: np.ndarray

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(np.log(self.radii), np.log(self.values), extrapolate=True)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.exp(self._interp(np.log(r)))


@lru_cache(maxsize=16)
def bessel_radial_profile(n: int, alpha: float, r_min: float, r_max: float) -> BesselRadialProfile:
    radii = np.geomspace(r_min, r_max, _BESSEL_CACHE_SIZE)
    values = np.array([_bessel_radial_value(n, alpha, R) for R in radii])
    if np.any(values <= 0) or np.any(np.diff(values) >= 0):
        raise RuntimeError("Bessel radial quadrature failed to produce a positive decreasing profile")
    return BesselRadialProfile(n, alpha, radii, values)


@lru_cache(maxsize=64)
def bessel_kernel_table(grid: Grid, alpha: float) -> KernelTable:
    n = grid.dim
    if not 0 < alpha < n:
        raise ValueError(f"need 0 < alpha < n for the tabulated Bessel kernel, got {alpha}")
    r = _offset_radii(grid)
    h = grid.spacing
    r_max = 2.0 * grid.half_width * np.sqrt(n) * 1.01
    profile = bessel_radial_profile(n, alpha, h / 4.0, r_max)
    vals = np.empty_like(r)
    nz = r > 0
    vals[nz] = profile(r[nz])
    # singular cell: equal-volume-ball average of the small-argument asymptote
    center = (grid.points_per_axis - 1,) * n
    vals[~nz] = 0.0
    vals[center] = singular_cell_average(n, alpha, h)
    return KernelTable(grid, vals, alpha, "bessel")


def kernel_table(grid: Grid, alpha: float, kind: str) -> KernelTable:
    if kind == "riesz":
        return riesz_kernel_table(grid, alpha)
    if kind == "bessel":
        return bessel_kernel_table(grid, alpha)
    raise ValueError(f"kind must be 'riesz' or 'bessel', got {kind!r}")


def export_radial_csv(profile: BesselRadialProfile, path: str):
    """Dump the radial cache as (radius, value) rows for inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["radius", "value"])
        for r, v in zip(profile.radii, profile.values):
            writer.writerow([repr(float(r)), repr(float(v))])
