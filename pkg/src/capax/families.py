"""Deterministic seeded test families: fields for inequality checks, measures
for Wolff-side checks.

The default family mixes ball indicators, Gaussian bumps at three scales,
two-bump sums, and an anisotropic profile; everything is a pure function of
(name, seed, count, grid).
"""

from __future__ import annotations

import numpy as np

from .grid import Field, Grid, ball_mask
from .potentials import Measure

__all__ = ["DEFAULT_FAMILY_SEED", "field_family", "measure_family", "family"]

DEFAULT_FAMILY_SEED = 271828

_BUMP_SCALES = (1 / 4, 1 / 10, 1 / 24)   # relative to the box half-width


def _gauss(grid: Grid, center, sigmas, amplitude):
    x = grid.nodes
    z = sum(((x[:, d] - center[d]) / sigmas[d]) ** 2 for d in range(grid.dim))
    return amplitude * np.exp(-0.5 * z).reshape(grid.shape)


def _indicator_sample(grid, rng):
    L = grid.half_width
    radius = rng.uniform(0.06, 0.22) * L
    center = rng.uniform(-0.4 * L, 0.4 * L, size=grid.dim)
    amp = rng.uniform(0.5, 2.0)
    return amp * ball_mask(grid, radius, center).members.astype(float)


def _bump_sample(grid, rng, scale_idx):
    L = grid.half_width
    sigma = _BUMP_SCALES[scale_idx % 3] * L
    center = rng.uniform(-0.45 * L, 0.45 * L, size=grid.dim)
    amp = rng.uniform(0.5, 2.0)
    return _gauss(grid, center, (sigma,) * grid.dim, amp)


def _two_bump_sample(grid, rng):
    L = grid.half_width
    c1 = rng.uniform(-0.45 * L, 0.45 * L, size=grid.dim)
    c2 = rng.uniform(-0.45 * L, 0.45 * L, size=grid.dim)
    a1, a2 = rng.uniform(0.5, 2.0, size=2)
    return _gauss(grid, c1, (L / 6,) * grid.dim, a1) + _gauss(grid, c2, (L / 18,) * grid.dim, a2)


def _aniso_sample(grid, rng):
    L = grid.half_width
    center = rng.uniform(-0.35 * L, 0.35 * L, size=grid.dim)
    amp = rng.uniform(0.5, 2.0)
    if grid.dim == 1:
        # skewed two-sided exponential profile
        x = grid.axis - center[0]
        s_right, s_left = L / 6, L / 24
        vals = amp * np.where(x >= 0, np.exp(-x / s_right), np.exp(x / s_left))
        return vals
    sigmas = tuple(L / 5 / (1 + 3 * d / max(grid.dim - 1, 1)) for d in range(grid.dim))
    return _gauss(grid, center, sigmas, amp)


def field_family(name: str, seed: int, count: int, grid: Grid) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if name == "mixed":
            kind = i % 4
            if kind == 0:
                vals = _indicator_sample(grid, rng)
            elif kind == 1:
                vals = _bump_sample(grid, rng, i // 4)
            elif kind == 2:
                vals = _two_bump_sample(grid, rng)
            else:
                vals = _aniso_sample(grid, rng)
        elif name == "indicators":
            vals = _indicator_sample(grid, rng)
        elif name == "bumps":
            vals = _bump_sample(grid, rng, i)
        elif name == "two_bumps":
            vals = _two_bump_sample(grid, rng)
        elif name == "aniso":
            vals = _aniso_sample(grid, rng)
        else:
            raise ValueError(f"unknown field family {name!r}")
        out.append(Field(grid, vals, nonneg=True))
    return out


def _atom_cloud(grid, rng, n_atoms=None):
    L = grid.half_width
    k = int(rng.integers(3, 11)) if n_atoms is None else n_atoms
    positions = rng.uniform(-0.5 * L, 0.5 * L, size=(k, grid.dim))
    masses = np.exp(rng.normal(0.0, 0.5, size=k))
    return Measure.from_atoms(grid, positions, masses)


def measure_family(name: str, seed: int, count: int, grid: Grid) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if name == "atoms":
            out.append(_atom_cloud(grid, rng))
        elif name == "dirac":
            pos = rng.uniform(-0.05 * grid.half_width, 0.05 * grid.half_width, size=grid.dim)
            out.append(Measure.from_atoms(grid, [pos], [1.0]))
        elif name == "densities":
            vals = _bump_sample(grid, rng, i) + 0.3 * _indicator_sample(grid, rng)
            out.append(Measure.from_density(Field(grid, vals, nonneg=True)))
        elif name == "measures":
            if i == 0:
                out.append(Measure.from_atoms(grid, [np.zeros(grid.dim)], [1.0]))
            elif i % 2 == 1:
                out.append(_atom_cloud(grid, rng))
            else:
                vals = _bump_sample(grid, rng, i)
                out.append(Measure.from_density(Field(grid, vals, nonneg=True)))
        else:
            raise ValueError(f"unknown measure family {name!r}")
    return out


_FIELD_FAMILIES = ("mixed", "indicators", "bumps", "two_bumps", "aniso")
_MEASURE_FAMILIES = ("atoms", "dirac", "densities", "measures")


def family(name: str, seed: int, count: int, grid: Grid) -> list:
    """Dispatch to the named family; returns Fields or Measures."""
    if name in _FIELD_FAMILIES:
        return field_family(name, seed, count, grid)
    if name in _MEASURE_FAMILIES:
        return measure_family(name, seed, count, grid)
    raise ValueError(f"unknown family {name!r}; known: {_FIELD_FAMILIES + _MEASURE_FAMILIES}")
