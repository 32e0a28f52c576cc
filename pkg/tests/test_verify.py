import json
import math

import numpy as np
import pytest

from capax.grid import Field, Grid, Params
from capax.families import DEFAULT_FAMILY_SEED, family, field_family, measure_family
from capax.potentials import Measure, wolff_at_points
from capax.verify import (check_boundedness, check_ibp, check_wolff_weak, refinement_study,
                          report_to_csv, report_to_json, run_check)

P = Params(1, 0.4, 2.0, q=1.5, p=2.0, r=1.0)


def test_family_determinism(g64):
    a = family("mixed", 123, 8, g64)
    b = family("mixed", 123, 8, g64)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    c = family("mixed", 124, 8, g64)
    assert any(not np.array_equal(x.values, y.values) for x, y in zip(a, c))
    assert family("mixed", 123, 0, g64) == []
    with pytest.raises(ValueError):
        family("unknown", 1, 4, g64)


def test_measure_family_determinism(g64):
    a = measure_family("measures", 9, 6, g64)
    b = measure_family("measures", 9, 6, g64)
    for x, y in zip(a, b):
        assert np.array_equal(x.atom_positions, y.atom_positions)
        assert np.array_equal(x.atom_masses, y.atom_masses)
    assert a[0].atoms and a[0].atom_masses[0] == 1.0   # leading unit atom


def test_family_manifest_statistics(g64):
    # frozen statistics of the documented default family
    from capax.grid import integrate

    fam = field_family("mixed", DEFAULT_FAMILY_SEED, 8, g64)
    masses = [round(integrate(f), 12) for f in fam]
    supports = [int(np.count_nonzero(f.values)) for f in fam]
    manifest = json.loads(open("tests/data/family_manifest.json").read())
    assert masses == manifest["masses"]
    assert supports == manifest["supports"]


def test_csim_finite_and_adams_degeneracy(g64):
    rep = run_check("csim", P, g64, count=6)
    assert all(math.isfinite(s.ratio) for s in rep.samples)
    assert rep.max_ratio > 0
    rep_s = run_check("adams", P, g64, count=6, q=P.s)
    assert [s.ratio for s in rep.samples] == [s.ratio for s in rep_s.samples]
    assert rep.inequality_id == "csim" and rep_s.inequality_id == "adams"


def test_adams_zero_sample_skipped(g64):
    from capax.verify import check_adams

    zero = Field(g64, np.zeros(g64.shape), nonneg=True)
    rep = check_adams(1.0, P, [zero], "riesz")
    assert rep.samples[0].skipped
    assert rep.max_ratio == 0.0


def test_ratio_scale_invariance(g64):
    for name, kw in [("csim", {}), ("adams", {"q": 1.0}), ("ibp", {"t": 2.0})]:
        rep1 = run_check(name, P, g64, count=4, **kw)
        rep2 = run_check(name, P, g64, count=4, scale=2.0, **kw)
        for a, b in zip(rep1.samples, rep2.samples):
            if not a.skipped and a.ratio > 0:
                assert abs(b.ratio / a.ratio - 1) <= 1e-12


def test_ibp_identity_and_sweep(g64):
    rep1 = run_check("ibp", P, g64, count=4, t=1.0)
    assert all(s.ratio == 1.0 for s in rep1.samples if not s.skipped)
    sweep = [run_check("ibp", P, g64, count=4, t=t).max_ratio for t in (1.0, 1.5, 2.0, 3.0)]
    assert all(math.isfinite(v) and v >= 1.0 - 1e-12 for v in sweep)


def test_boundedness_two_atoms_exact_constant(g64):
    factor = 2.0 ** ((P.n - P.alpha * P.s) / (P.s - 1.0))
    mu2 = Measure.from_atoms(g64, [[-0.15], [0.15]], [1.0, 1.0])
    rep = check_boundedness([mu2], P)
    assert rep.meta["factor"] == pytest.approx(factor)
    assert rep.samples[0].ratio <= 1.0 + 0.02


def test_boundedness_truncated_variant(g64):
    mu = Measure.from_atoms(g64, [[-0.2], [0.1], [0.3]], [1.0, 0.5, 2.0])
    rep = check_boundedness([mu], P, R=0.5)
    assert rep.meta["R"] == 0.5
    assert rep.samples[0].ratio <= 1.0 + 0.02


def test_upper_tri_quantities_and_dirac(g64):
    rep = run_check("upper_tri", P, g64, count=4, budget=4, levels=20)
    done = [s for s in rep.samples if not s.skipped]
    assert done and all(math.isfinite(s.ratio) for s in done)
    for s in done:
        for key in ("trace_lb", "pairing_lb", "wolff_mu", "wolff_cap"):
            assert s.quantities[key] > 0
    # first sample of the 'measures' family is a unit Dirac: closed form for
    # the Wolff-mu functional through the potential value at the atom
    mu = measure_family("measures", DEFAULT_FAMILY_SEED, 4, g64)[0]
    s0 = rep.samples[0]
    w_atom = wolff_at_points(mu, P.alpha, P.s, mu.atom_positions)[0]
    kappa = (P.n - P.alpha * P.s) / (P.s - 1.0)
    closed = (1.0 / kappa) * (g64.spacing / 2.0) ** (-kappa)
    assert abs(w_atom / closed - 1) <= 0.02
    expected_q3 = w_atom ** ((P.s - 1.0) * P.r / P.s)
    assert s0.quantities["wolff_mu"] == pytest.approx(expected_q3, rel=1e-9)


def test_wolff_weak_estimates(g64):
    mu = Measure.from_atoms(g64, [[0.05], [-0.2]], [1.0, 0.5])
    w_max = float(np.max(wolff_at_points(mu, P.alpha, P.s, g64.nodes)))
    rep = check_wolff_weak(mu, 2.0, P)
    assert all(math.isfinite(s.ratio) for s in rep.samples if not s.skipped)
    # a level above the global maximum empties both sides
    rep_hi = check_wolff_weak(mu, w_max * 1.5, P, a_values=(2.0,))
    assert rep_hi.samples[0].skipped


def test_newnorm2_and_kv_bands(g64):
    rep = run_check("newnorm2", P, g64, count=3, q=1.5, levels=16)
    done = [s for s in rep.samples if not s.skipped]
    assert done and all(math.isfinite(s.ratio) for s in done)
    rep_kv = run_check("kv", P, g64, count=3, q=1.5, levels=16)
    done_kv = [s for s in rep_kv.samples if not s.skipped]
    assert done_kv and all(math.isfinite(s.ratio) for s in done_kv)
    assert max(s.ratio for s in done_kv) <= 10.0


def test_main3_pairing(g64):
    rep = run_check("main3", P, g64, count=3, levels=16, budget=4)
    done = [s for s in rep.samples if not s.skipped]
    assert done and all(math.isfinite(s.ratio) for s in done)


def test_main2_limit_toward_csim(g64):
    # constant unit-norm weight and q near s reproduce the unweighted ratios
    s = P.s
    q = 0.999 * s
    rep_m2 = run_check("main2", P, g64, count=4, q=q, levels=32)
    rep_cs = run_check("csim", P, g64, count=4, levels=32)
    a = rep_m2.samples[-1]     # the constant-weight pair
    b = rep_cs.samples[-1]
    assert not a.skipped and not b.skipped
    assert abs(a.ratio / b.ratio ** (1 / s) - 1) <= 0.05


def test_refinement_study_rows():
    rep = refinement_study("ibp", P, (32, 64), kind="riesz", count=3, t=2.0)
    assert [n for n, _ in rep.refinement] == [32, 64]
    assert all(math.isfinite(r) for _, r in rep.refinement)


def test_report_serialization_roundtrip(g64):
    rep = run_check("csim", P, g64, count=3)
    j1 = report_to_json(rep)
    j2 = report_to_json(run_check("csim", P, g64, count=3))
    assert j1 == j2
    doc = json.loads(j1)
    assert doc["inequality_id"] == "csim"
    assert len(doc["samples"]) == 3
    csv_text = report_to_csv(rep)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "sample_id,lhs,rhs,ratio"
    assert len(lines) == 4
    # repr round-trip of the ratio column
    first = lines[1].split(",")
    assert float(first[3]) == rep.samples[0].ratio


def test_unknown_check_rejected(g64):
    with pytest.raises(ValueError):
        run_check("nope", P, g64)
