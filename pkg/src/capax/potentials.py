"""Riesz, Bessel, and Wolff potentials of grid functions and measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property

import numpy as np

from .convolve import direct_linear_convolve, fft_linear_convolve
from .grid import Field, Grid, integrate
from .kernels import KernelTable, bessel_kernel_table, kernel_table, riesz_kernel_table

__all__ = [
    "Measure",
    "riesz_potential",
    "bessel_potential",
    "potential",
    "apply_kernel",
    "wolff_potential",
    "wolff_at_points",
]


def apply_kernel(table: KernelTable, values: np.ndarray, method: str = "fast") -> np.ndarray:
    """h^n-weighted linear convolution of grid values with a kernel table."""
    if values.shape != table.grid.shape:
        raise ValueError("incompatible grids: field shape does not match kernel table")
    if method == "fast":
        out = fft_linear_convolve(values, table.values, kernel_rfft=table.padded_rfft)
    elif method == "direct":
        out = direct_linear_convolve(values, table.values)
    else:
        raise ValueError(f"method must be 'fast' or 'direct', got {method!r}")
    return out * table.grid.cell_volume


def riesz_potential(f: Field, alpha: float, method: str = "fast") -> Field:
    table = riesz_kernel_table(f.grid, alpha)
    return Field(f.grid, apply_kernel(table, f.values, method), nonneg=f.nonneg)


def bessel_potential(f: Field, alpha: float, method: str = "fast") -> Field:
    table = bessel_kernel_table(f.grid, alpha)
    return Field(f.grid, apply_kernel(table, f.values, method), nonneg=f.nonneg)


def potential(f: Field, alpha: float, kind: str, method: str = "fast") -> Field:
    table = kernel_table(f.grid, alpha, kind)
    return Field(f.grid, apply_kernel(table, f.values, method), nonneg=f.nonneg)


@dataclass(frozen=True)
class Measure:
    """Nonnegative measure: point atoms plus an optional grid density."""

    grid: Grid
    atoms: tuple = ()
    density: Field | None = None

    def __post_init__(self):
        L = self.grid.half_width
        norm_atoms = []
        for pos, mass in self.atoms:
            p = tuple(float(c) for c in np.atleast_1d(np.asarray(pos, dtype=float)))
            if len(p) != self.grid.dim:
                raise ValueError(f"atom position {p} has wrong dimension")
            if any(abs(c) > L for c in p):
                raise ValueError(f"atom position {p} outside the box [-{L}, {L}]^n")
            if not mass > 0:
                raise ValueError(f"atom mass must be positive, got {mass}")
            norm_atoms.append((p, float(mass)))
        object.__setattr__(self, "atoms", tuple(norm_atoms))
        if self.density is not None:
            if self.density.grid != self.grid:
                raise ValueError("density grid does not match measure grid")
            if np.any(self.density.values < 0):
                raise ValueError("density must be nonnegative")

    @cached_property
    def atom_positions(self) -> np.ndarray:
        if not self.atoms:
            return np.zeros((0, self.grid.dim))
        return np.array([pos for pos, _ in self.atoms], dtype=float)

    @cached_property
    def atom_masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    @property
    def total_mass(self) -> float:
        total = float(np.sum(self.atom_masses))
        if self.density is not None:
            total += integrate(self.density)
        return total

    def scaled(self, factor: float) -> "Measure":
        if not factor >= 0:
            raise ValueError("scale factor must be nonnegative")
        atoms = tuple((p, m * factor) for p, m in self.atoms) if factor > 0 else ()
        dens = None
        if self.density is not None:
            dens = Field(self.grid, self.density.values * factor, nonneg=True)
        return Measure(self.grid, atoms, dens)

    @classmethod
    def from_atoms(cls, grid: Grid, positions, masses) -> "Measure":
        return cls(grid, tuple(zip([tuple(np.atleast_1d(p)) for p in positions], masses)))

    @classmethod
    def from_density(cls, density: Field) -> "Measure":
        return cls(density.grid, (), density)


# -- ball masses of the density part ------------------------------------------

def _density_mass_1d(grid: Grid, dens: np.ndarray, centers: np.ndarray,
                     radii: np.ndarray) -> np.ndarray:
    """Exact mass of the piecewise-constant density over [c - r, c + r] (broadcasting)."""
    L, h, N = grid.half_width, grid.spacing, grid.points_per_axis
    edges = -L + h * np.arange(N + 1)
    cum = np.concatenate([[0.0], np.cumsum(dens) * h])
    lo = np.clip(centers - radii, -L, L)
    hi = np.clip(centers + radii, -L, L)
    return np.interp(hi, edges, cum) - np.interp(lo, edges, cum)


def _density_mass_on_grid(grid: Grid, dens: np.ndarray, radius: float) -> np.ndarray:
    """Node-counting ball mass of the density about every node, flat array."""
    from .maximal import ball_stencil

    stencil = ball_stencil(grid, radius)
    return np.maximum(fft_linear_convolve(dens, stencil), 0.0).ravel() * grid.cell_volume


def _density_mass_at_points(grid: Grid, dens: np.ndarray, points: np.ndarray,
                            radii_per_point: np.ndarray) -> np.ndarray:
    """Ball masses at arbitrary points; radii_per_point has shape (P, C)."""
    if grid.dim == 1:
        return _density_mass_1d(grid, dens.ravel(), points[:, :1], radii_per_point)
    out = np.empty_like(radii_per_point)
    flat = dens.ravel() * grid.cell_volume
    for i, p in enumerate(points):
        d = np.sqrt(np.sum((grid.nodes - p) ** 2, axis=-1))
        order = np.argsort(d, kind="stable")
        csum = np.concatenate([[0.0], np.cumsum(flat[order])])
        idx = np.searchsorted(d[order], radii_per_point[i] * (1 + 1e-12), side="right")
        out[i] = csum[idx]
    return out


def _wolff_eval(mu: Measure, alpha: float, s: float, R: float,
                points: np.ndarray | None) -> np.ndarray:
    grid = mu.grid
    n, h = grid.dim, grid.spacing
    if not s > 1:
        raise ValueError(f"s must exceed 1, got {s}")
    kappa = (n - alpha * s) / (s - 1.0)
    if kappa <= 0:
        raise ValueError(f"divergent tail: need n - alpha*s > 0, got {n - alpha * s}")
    if not R > 0:
        raise ValueError("R must be positive")

    on_grid = points is None
    pts = grid.nodes if on_grid else np.atleast_2d(np.asarray(points, dtype=float))
    P = pts.shape[0]

    t0 = h / 2.0
    if R <= t0:
        return np.zeros(P)
    infinite = math.isinf(R)
    if infinite:
        span = 4.0 * grid.half_width
    else:
        span = R
    n_oct = max(1, int(math.ceil(math.log2(span / t0))))
    shared = t0 * 2.0 ** np.arange(n_oct + 1)
    if infinite:
        t_hi = shared[-1]  # first dyadic radius at which every ball swallows the box
    else:
        shared = np.concatenate([shared[shared < R], [R]])
        t_hi = R

    exponent = 1.0 / (s - 1.0)
    have_atoms = len(mu.atoms) > 0
    if have_atoms:
        dist = np.sqrt(np.sum((pts[:, None, :] - mu.atom_positions[None, :, :]) ** 2, axis=-1))
        extra = np.clip(dist, t0, t_hi)
        knots = np.concatenate([np.broadcast_to(shared, (P, shared.size)), extra], axis=1)
        knots = np.sort(knots, axis=1)
    else:
        knots = np.broadcast_to(shared, (P, shared.size))

    a, b = knots[:, :-1], knots[:, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        mids = np.sqrt(a * b)

    masses = np.zeros_like(mids)
    if have_atoms:
        masses += np.einsum(
            "pac,a->pc", (dist[:, :, None] <= mids[:, None, :] * (1 + 1e-12)).astype(float),
            mu.atom_masses,
        )
    if mu.density is not None:
        dens = mu.density.values
        if n == 1:
            masses += _density_mass_1d(grid, dens.ravel(), pts[:, :1], mids)
        elif on_grid and not have_atoms:
            cols = np.stack([_density_mass_on_grid(grid, dens, r) for r in mids[0]], axis=1)
            masses = masses + cols
        elif on_grid:
            # shared log-spaced radius table, then linear interpolation per node
            tab_r = np.geomspace(t0, t_hi, 4 * (n_oct + 1))
            tab = np.stack([_density_mass_on_grid(grid, dens, r) for r in tab_r], axis=1)
            idx = np.clip(np.searchsorted(tab_r, mids), 1, tab_r.size - 1)
            r_lo, r_hi = tab_r[idx - 1], tab_r[idx]
            w_hi = (mids - r_lo) / (r_hi - r_lo)
            rows = np.arange(P)[:, None]
            masses += (1 - w_hi) * tab[rows, idx - 1] + w_hi * tab[rows, idx]
        else:
            masses += _density_mass_at_points(grid, dens, pts, mids)

    seg = masses**exponent * 0.5 * (a**-kappa + b**-kappa) * np.log(b / a)
    w = np.sum(seg, axis=1)
    if infinite:
        w += mu.total_mass**exponent * t_hi**-kappa / kappa
    return w


def wolff_potential(mu: Measure, alpha: float, s: float, R: float = math.inf) -> Field:
    """Radial shell integral of [mu(B_t)/t^(n - alpha s)]^(1/(s-1)) dt/t up to R.

    Discretized over dyadic shells starting at h/2, with knots inserted at the
    atom distances of each node; for R = inf the exact power-law tail beyond
    the radius where balls contain the whole box is added in closed form.
    """
    vals = _wolff_eval(mu, alpha, s, R, None).reshape(mu.grid.shape)
    return Field(mu.grid, vals, nonneg=True)


def wolff_at_points(mu: Measure, alpha: float, s: float, points,
                    R: float = math.inf) -> np.ndarray:
    """Same integral evaluated at arbitrary points (e.g. on supp(mu))."""
    return _wolff_eval(mu, alpha, s, R, np.asarray(points, dtype=float))
