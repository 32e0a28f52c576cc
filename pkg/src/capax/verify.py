"""Inequality harness: seeded families, empirical best constants, refinement studies.

Each check evaluates one of the capacitary inequalities sample by sample and
reports the lhs/rhs ratios. Constants are recorded, never asserted against
invented targets; the suite asserts finiteness, degenerate-case exactness,
homogeneity invariance, and refinement stability instead. Samples whose rhs
vanishes while the lhs does not produce an infinite ratio, which fails hard.
"""

from __future__ import annotations

import io
import csv
import json
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .capacity import capacity, choquet_integral, lq_cap_norm, _solve
from .families import DEFAULT_FAMILY_SEED, family, field_family, measure_family
from .grid import Field, Grid, Mask, Params, integrate
from .potentials import Measure, potential, wolff_at_points, wolff_potential
from .spaces import beta_functional, kv_norm, lambda_functional, m_norm, n_norm, otilde_norm

__all__ = [
    "Sample",
    "ConstantReport",
    "check_csim",
    "check_adams",
    "check_main2",
    "check_ibp",
    "check_boundedness",
    "check_upper_tri",
    "check_wolff_weak",
    "check_newnorm2",
    "check_kv_equiv",
    "check_main3",
    "main2_pairs",
    "run_check",
    "refinement_study",
    "report_to_json",
    "report_to_csv",
    "family",
]


@dataclass
class Sample:
    sample_id: int
    lhs: float
    rhs: float
    ratio: float
    skipped: bool = False
    note: str = ""
    quantities: dict = dataclass_field(default_factory=dict)


@dataclass
class ConstantReport:
    inequality_id: str
    params: Params
    family_seed: int
    samples: list
    max_ratio: float
    refinement: list = dataclass_field(default_factory=list)   # (N, max_ratio) rows
    meta: dict = dataclass_field(default_factory=dict)


def _finish(inequality_id, params, seed, samples, meta=None) -> ConstantReport:
    ratios = [s.ratio for s in samples if not s.skipped]
    max_ratio = max(ratios) if ratios else 0.0
    return ConstantReport(inequality_id, params, seed, samples, max_ratio, [], meta or {})


def _ratio(lhs: float, rhs: float) -> tuple:
    """(ratio, skipped): 0/0 is skipped, positive/0 is an infinite hard failure."""
    if rhs == 0.0:
        if lhs == 0.0:
            return 0.0, True
        return math.inf, False
    return lhs / rhs, False


# -- capacitary strong type inequalities ----------------------------------------

def check_adams(q: float, params: Params, fields, kind: str = "riesz",
                seed: int = DEFAULT_FAMILY_SEED, levels: int = 32,
                tol: float = 1e-6) -> ConstantReport:
    """Choquet integral of (I f)^q against the defect integral f^s (I f)^(q-s)."""
    if not q >= 1:
        raise ValueError("q must be >= 1")
    samples = []
    for i, f in enumerate(fields):
        vals = f.values
        if not np.any(vals > 0):
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="zero sample"))
            continue
        v = potential(f, params.alpha, kind).values
        lhs = choquet_integral(Field(f.grid, v**q, nonneg=True), params, kind,
                               levels=levels, tol=tol)
        integrand = np.where(vals > 0, vals**params.s * v ** (q - params.s), 0.0)
        rhs = integrate(Field(f.grid, integrand))
        ratio, skipped = _ratio(lhs, rhs)
        samples.append(Sample(i, lhs, rhs, ratio, skipped=skipped))
    return _finish("adams", params.replace(q=q), seed, samples)


def check_csim(params: Params, fields, kind: str = "riesz",
               seed: int = DEFAULT_FAMILY_SEED, levels: int = 32,
               tol: float = 1e-6) -> ConstantReport:
    """Maz'ya-type strong inequality: the q = s case of the same computation."""
    rep = check_adams(params.s, params, fields, kind, seed, levels, tol)
    rep.inequality_id = "csim"
    return rep


def main2_pairs(grid: Grid, params: Params, count: int, kind: str = "riesz",
                seed: int = DEFAULT_FAMILY_SEED, levels: int = 32,
                tol: float = 1e-6, const_weight_last: bool = True):
    """(f, w) pairs with unit-L^q(cap) weights built from potential witnesses."""
    q = params.q
    fs = field_family("mixed", seed, count, grid)
    aux = field_family("bumps", seed + 1, count, grid)
    pairs = []
    for i in range(count):
        if const_weight_last and i == count - 1:
            w_raw = np.ones(grid.shape)
        else:
            v = potential(aux[i], params.alpha, kind).values
            w_raw = v ** (params.s / q)
        nrm = lq_cap_norm(Field(grid, w_raw, nonneg=True), q, params, kind,
                          levels=levels, tol=tol)
        pairs.append((fs[i], Field(grid, w_raw / nrm, nonneg=True)))
    return pairs


def check_main2(q: float, params: Params, pairs, kind: str = "riesz",
                seed: int = DEFAULT_FAMILY_SEED, levels: int = 32,
                tol: float = 1e-6) -> ConstantReport:
    """Weighted bound: L^q(cap) norm of I f against the w-weighted s-integral."""
    if not 1 <= q < params.s:
        raise ValueError("check_main2 needs 1 <= q < s")
    p = params.replace(q=q)
    samples = []
    for i, (f, w) in enumerate(pairs):
        vals = f.values
        if not np.any(vals > 0):
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="zero sample"))
            continue
        v = potential(f, p.alpha, kind).values
        lhs = choquet_integral(Field(f.grid, v**q, nonneg=True), p, kind,
                               levels=levels, tol=tol) ** (1.0 / q)
        wv = w.values
        integrand = np.where(vals > 0, vals**p.s * np.where(wv > 0, wv, 1.0) ** (q - p.s), 0.0)
        if np.any((vals > 0) & (wv <= 0)):
            rhs = math.inf
        else:
            rhs = integrate(Field(f.grid, integrand)) ** (1.0 / p.s)
        if math.isinf(rhs):
            samples.append(Sample(i, lhs, rhs, 0.0, skipped=True, note="weight vanishes on support"))
            continue
        ratio, skipped = _ratio(lhs, rhs)
        samples.append(Sample(i, lhs, rhs, ratio, skipped=skipped))
    return _finish("main2", p, seed, samples)


def check_ibp(t: float, params: Params, fields, kind: str = "riesz",
              seed: int = DEFAULT_FAMILY_SEED) -> ConstantReport:
    """Pointwise integrating-by-parts bound (I f)^t <= A * I[f (I f)^(t-1)]."""
    if not t >= 1:
        raise ValueError("t must be >= 1")
    samples = []
    for i, f in enumerate(fields):
        vals = f.values
        if not np.any(vals > 0):
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="zero sample"))
            continue
        v = potential(f, params.alpha, kind).values
        lhs = v**t
        inner = Field(f.grid, vals * v ** (t - 1.0), nonneg=True)
        rhs = potential(inner, params.alpha, kind).values
        sup = float(np.max(lhs / rhs))
        samples.append(Sample(i, float(np.max(lhs)), float(np.max(rhs)), sup,
                              quantities={"sup_ratio": sup}))
    rep = _finish("ibp", params, seed, samples)
    rep.meta["t"] = t
    return rep


# -- Wolff potential checks ------------------------------------------------------

def check_boundedness(mu_family, params: Params, R: float = math.inf,
                      seed: int = DEFAULT_FAMILY_SEED) -> ConstantReport:
    """Global max of W^R against 2^((n - alpha s)/(s-1)) times the supp max of W^(2R)."""
    factor = 2.0 ** ((params.n - params.alpha * params.s) / (params.s - 1.0))
    samples = []
    for i, mu in enumerate(mu_family):
        if mu.density is not None:
            raise ValueError("boundedness check requires atomic measures")
        if not mu.atoms:
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="empty measure"))
            continue
        w_nodes = wolff_potential(mu, params.alpha, params.s, R).values
        r2 = R if math.isinf(R) else 2.0 * R
        w_supp = wolff_at_points(mu, params.alpha, params.s, mu.atom_positions, r2)
        lhs = float(np.max(w_nodes))
        rhs = factor * float(np.max(w_supp))
        ratio, skipped = _ratio(lhs, rhs)
        samples.append(Sample(i, lhs, rhs, ratio, skipped=skipped,
                              quantities={"n_atoms": len(mu.atoms)}))
    rep = _finish("boundedness", params, seed, samples)
    rep.meta["R"] = None if math.isinf(R) else R
    rep.meta["factor"] = factor
    return rep


def _nearest_node_index(grid: Grid, pos) -> tuple:
    return tuple(
        int(np.clip(np.rint((pos[d] + grid.half_width) / grid.spacing - 0.5),
                    0, grid.points_per_axis - 1))
        for d in range(grid.dim)
    )


def _measure_pairing(mu: Measure, values: np.ndarray) -> float:
    """integral of a grid function against mu (atoms read the nearest node)."""
    total = 0.0
    grid = mu.grid
    if mu.atoms:
        for pos, mass in zip(mu.atom_positions, mu.atom_masses):
            total += float(mass) * float(values[_nearest_node_index(grid, pos)])
    if mu.density is not None:
        total += integrate(Field(grid, values * mu.density.values))
    return float(total)


def check_upper_tri(mu_family, params: Params, kind: str = "riesz",
                    seed: int = DEFAULT_FAMILY_SEED, budget: int = 8,
                    levels: int = 32, tol: float = 1e-6) -> ConstantReport:
    """Four equivalent trace quantities for each measure: candidate-h trace
    bound, dual pairing bound, Wolff-mu functional, and Wolff-cap functional."""
    r, s = params.r, params.s
    if r is None or not 0 < r < s:
        raise ValueError("check_upper_tri needs params.r in (0, s)")
    grid = mu_family[0].grid if mu_family else None
    cands = field_family("mixed", seed + 2, budget, grid) if grid is not None else []
    cand_pot = []
    cand_unit = []
    for h in cands:
        from .grid import lp_norm

        nrm = lp_norm(h, s)
        if nrm <= 0:
            continue
        hn = Field(grid, h.values / nrm, nonneg=True)
        cand_pot.append(potential(hn, params.alpha, kind).values)
        u_nrm = lq_cap_norm(h, s / r, params, kind, levels=levels, tol=tol)
        cand_unit.append(h.values / u_nrm)

    wolff_R = 1.0 if kind == "bessel" else math.inf
    samples = []
    for i, mu in enumerate(mu_family):
        if mu.total_mass <= 0:
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="zero measure"))
            continue
        a1 = max(_measure_pairing(mu, v**r) for v in cand_pot)
        a2 = max(_measure_pairing(mu, u) for u in cand_unit)
        w = wolff_potential(mu, params.alpha, s, wolff_R).values
        mu_exp = (s - 1.0) * r / (s - r)
        q3 = _measure_pairing(mu, w**mu_exp) ** ((s - r) / s)
        cap_exp = (s - 1.0) * s / (s - r)
        q4 = choquet_integral(Field(grid, w**cap_exp, nonneg=True), params, kind,
                              levels=levels, tol=tol) ** ((s - r) / s)
        quantities = {"trace_lb": a1, "pairing_lb": a2, "wolff_mu": q3, "wolff_cap": q4}
        vals = np.array([a1, a2, q3, q4])
        if np.any(vals <= 0):
            samples.append(Sample(i, float(vals.max()), float(vals.min()), math.inf,
                                  quantities=quantities, note="nonpositive quantity"))
            continue
        band = float(vals.max() / vals.min())
        samples.append(Sample(i, float(vals.max()), float(vals.min()), band,
                              quantities=quantities))
    return _finish("upper_tri", params, seed, samples)


def check_wolff_weak(mu: Measure, t: float, params: Params, kind: str = "riesz",
                     a_values=(2.0, 4.0, 8.0), tol: float = 1e-6,
                     seed: int = DEFAULT_FAMILY_SEED) -> ConstantReport:
    """Superlevel capacity bound cap({W > a t}) <= A t^(1-s) mu({W > t})."""
    if not t > 0:
        raise ValueError("t must be positive")
    grid = mu.grid
    w = wolff_potential(mu, params.alpha, params.s).values
    base_mask = w > t
    mu_et = 0.0
    if np.any(base_mask):
        if mu.atoms:
            for pos, mass in zip(mu.atom_positions, mu.atom_masses):
                if base_mask[_nearest_node_index(grid, pos)]:
                    mu_et += float(mass)
        if mu.density is not None:
            mu_et += integrate(Field(grid, base_mask * mu.density.values))
    rhs = t ** (1.0 - params.s) * mu_et
    samples = []
    for i, a in enumerate(a_values):
        mask = w > a * t
        if not np.any(mask):
            lhs = 0.0
        else:
            lhs = capacity(Mask(grid, mask), params, kind, tol=tol).value
        ratio, skipped = _ratio(lhs, rhs)
        samples.append(Sample(i, lhs, rhs, ratio, skipped=skipped, quantities={"a": a}))
    rep = _finish("wolff_weak", params, seed, samples)
    rep.meta["t"] = t
    return rep


# -- norm equivalence bands ------------------------------------------------------

def check_newnorm2(q: float, u_family, params: Params, kind: str = "riesz",
                   seed: int = DEFAULT_FAMILY_SEED, levels: int = 24,
                   tol: float = 1e-6) -> ConstantReport:
    """Three-way band between the L^q(cap) quasi-norm and the two functionals."""
    p = params.replace(q=q)
    samples = []
    for i, u in enumerate(u_family):
        if not np.any(np.abs(u.values) > 0):
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="zero sample"))
            continue
        n1 = lq_cap_norm(u, q, p, kind, levels=levels, tol=tol)
        n2 = lambda_functional(u, p, kind, tol=tol, levels=levels).upper
        n3 = beta_functional(u, p, kind, tol=tol, levels=levels).upper
        vals = np.array([n1, n2, n3])
        quantities = {"lq_cap": n1, "lambda": n2, "beta": n3}
        if np.any(vals <= 0):
            samples.append(Sample(i, float(vals.max()), float(vals.min()), math.inf,
                                  quantities=quantities, note="nonpositive"))
            continue
        band = float(vals.max() / vals.min())
        samples.append(Sample(i, float(vals.max()), float(vals.min()), band,
                              quantities=quantities))
    return _finish("newnorm2", p, seed, samples)


def check_kv_equiv(q: float, g_family, params: Params, kind: str = "riesz",
                   seed: int = DEFAULT_FAMILY_SEED, levels: int = 24,
                   tol: float = 1e-6) -> ConstantReport:
    """Two-sided ratio band between the majorant norm and the weighted O-norm."""
    p = params.replace(q=q)
    samples = []
    for i, g in enumerate(g_family):
        if not np.any(np.abs(g.values) > 0):
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="zero sample"))
            continue
        nk = kv_norm(g, p, kind, tol=tol, levels=levels).upper
        no = otilde_norm(g, p, kind, tol=tol, levels=levels).upper
        quantities = {"kv": nk, "otilde": no}
        if nk <= 0 or no <= 0:
            samples.append(Sample(i, nk, no, math.inf, quantities=quantities,
                                  note="nonpositive"))
            continue
        band = max(nk / no, no / nk)
        samples.append(Sample(i, nk, no, band, quantities=quantities))
    return _finish("kv_equiv", p, seed, samples)


def check_main3(p: float, r: float, pair_family, params: Params, kind: str = "riesz",
                seed: int = DEFAULT_FAMILY_SEED, levels: int = 24,
                tol: float = 1e-6, budget: int = 8) -> ConstantReport:
    """Koethe pairing: integral of |f g| for f in the trace-norm unit ball
    against the N-norm of g (f normalized by its certified lower bound)."""
    pp = params.replace(p=p, r=r)
    samples = []
    for i, (f, g) in enumerate(pair_family):
        mf = m_norm(f, pp, kind, budget=budget, seed=seed + 3, tol=tol, levels=levels)
        if mf.lower <= 0 or not np.any(np.abs(g.values) > 0):
            samples.append(Sample(i, 0.0, 0.0, 0.0, skipped=True, note="degenerate pair"))
            continue
        f_unit = np.abs(f.values) / mf.lower
        lhs = integrate(Field(f.grid, f_unit * np.abs(g.values)))
        rhs = n_norm(g, pp, kind, variant="plain", tol=tol, levels=levels,
                     budget=budget, seed=seed + 4).upper
        ratio, skipped = _ratio(lhs, rhs)
        samples.append(Sample(i, lhs, rhs, ratio, skipped=skipped))
    return _finish("main3", pp, seed, samples)


# -- dispatch, refinement, and serialization -------------------------------------

def run_check(name: str, params: Params, grid: Grid, kind: str = "riesz",
              seed: int = DEFAULT_FAMILY_SEED, count: int = 8, levels: int = 32,
              tol: float = 1e-6, scale: float = 1.0, **kw) -> ConstantReport:
    """Build the named check's default family on the grid and run it.

    Reports are bit-reproducible from (name, params, seed, grid, count, levels).
    The `scale` knob multiplies the family, for homogeneity-invariance checks.
    """
    def scaled_fields(fam):
        if scale == 1.0:
            return fam
        return [Field(grid, scale * f.values, nonneg=True) for f in fam]

    if name == "csim":
        return check_csim(params, scaled_fields(field_family("mixed", seed, count, grid)),
                          kind, seed, levels, tol)
    if name == "adams":
        q = kw.get("q", params.q if params.q is not None else params.s)
        return check_adams(q, params, scaled_fields(field_family("mixed", seed, count, grid)),
                           kind, seed, levels, tol)
    if name == "main2":
        q = kw.get("q", params.q)
        pairs = main2_pairs(grid, params.replace(q=q), count, kind, seed, levels, tol)
        pairs = [(Field(grid, scale * f.values, nonneg=True), w) for f, w in pairs]
        return check_main2(q, params, pairs, kind, seed, levels, tol)
    if name == "ibp":
        t = kw.get("t", 2.0)
        return check_ibp(t, params, scaled_fields(field_family("mixed", seed, count, grid)),
                         kind, seed)
    if name == "boundedness":
        R = kw.get("R", math.inf)
        mus = [m.scaled(scale) if scale != 1.0 else m
               for m in measure_family("atoms", seed, count, grid)]
        return check_boundedness(mus, params, R, seed)
    if name == "upper_tri":
        mus = [m.scaled(scale) if scale != 1.0 else m
               for m in measure_family("measures", seed, count, grid)]
        return check_upper_tri(mus, params, kind, seed, kw.get("budget", 8), levels, tol)
    if name == "newnorm2":
        q = kw.get("q", params.q)
        return check_newnorm2(q, scaled_fields(field_family("mixed", seed, count, grid)),
                              params, kind, seed, min(levels, 24), tol)
    if name == "kv":
        q = kw.get("q", params.q)
        return check_kv_equiv(q, scaled_fields(field_family("mixed", seed, count, grid)),
                              params, kind, seed, min(levels, 24), tol)
    if name == "main3":
        p = kw.get("p", params.p)
        r = kw.get("r", params.r)
        fs = field_family("mixed", seed, count, grid)
        gs = field_family("bumps", seed + 5, count, grid)
        pair_family = [(fs[i], Field(grid, scale * gs[i].values, nonneg=True))
                       for i in range(count)]
        return check_main3(p, r, pair_family, params, kind, seed, min(levels, 24), tol,
                           kw.get("budget", 8))
    raise ValueError(f"unknown check {name!r}")


def refinement_study(name: str, params: Params, Ns, half_width: float = 1.0,
                     kind: str = "riesz", seed: int = DEFAULT_FAMILY_SEED,
                     count: int = 8, levels: int = 32, tol: float = 1e-6,
                     **kw) -> ConstantReport:
    """Run the named check across grid sizes; refinement rows are (N, max_ratio)."""
    dim = params.n
    rows = []
    last = None
    for N in Ns:
        grid = Grid(dim, half_width, int(N))
        last = run_check(name, params, grid, kind, seed, count, levels, tol, **kw)
        rows.append((int(N), last.max_ratio))
    last.refinement = rows
    return last


def report_to_json(report: ConstantReport) -> str:
    doc = {
        "inequality_id": report.inequality_id,
        "params": {
            "n": report.params.n, "alpha": report.params.alpha, "s": report.params.s,
            "q": report.params.q, "p": report.params.p, "r": report.params.r,
        },
        "family_seed": report.family_seed,
        "max_ratio": float(report.max_ratio),
        "samples": [
            {
                "sample_id": s.sample_id, "lhs": float(s.lhs), "rhs": float(s.rhs),
                "ratio": float(s.ratio), "skipped": s.skipped, "note": s.note,
                "quantities": {k: (float(v) if isinstance(v, (int, float, np.floating))
                                   else v) for k, v in s.quantities.items()},
            }
            for s in report.samples
        ],
        "refinement": [[int(n), float(r)] for n, r in report.refinement],
        "meta": report.meta,
    }
    return json.dumps(doc, indent=2)


def report_to_csv(report: ConstantReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["sample_id", "lhs", "rhs", "ratio"])
    for s in report.samples:
        writer.writerow([s.sample_id, repr(s.lhs), repr(s.rhs), repr(s.ratio)])
    return buf.getvalue()
