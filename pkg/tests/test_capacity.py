import json
import math

import numpy as np
import pytest

from capax.grid import Field, Grid, Mask, Params, ball_mask, cube_mask
from capax.capacity import NormEstimate, capacity, choquet_integral, f_norm, lq_cap_norm
from capax.potentials import riesz_potential


def test_empty_set_capacity(g64, params):
    res = capacity(Mask.empty(g64), params)
    assert res.value == 0.0 and res.converged
    assert np.all(res.extremal.values == 0)


def test_capacity_against_interior_point_oracle(g64, params):
    cp = pytest.importorskip("cvxpy")
    E = ball_mask(g64, 0.25)
    mine = capacity(E, params, tol=1e-9)
    assert mine.converged

    from capax.kernels import riesz_kernel_table

    table = riesz_kernel_table(g64, params.alpha)
    N, h = g64.points_per_axis, g64.spacing
    K = np.array([table.values[i:i + N][::-1] * h for i in range(N)])
    idx = np.where(E.members)[0]
    f = cp.Variable(N, nonneg=True)
    prob = cp.Problem(cp.Minimize(h * cp.sum_squares(f)), [K[idx] @ f >= 1])
    prob.solve(solver=cp.CLARABEL)
    assert abs(mine.value - prob.value) / prob.value <= 1e-6


def test_capacity_result_invariants(g64, params):
    res = capacity(ball_mask(g64, 0.2), params, tol=1e-7)
    assert res.converged
    assert res.feasibility_residual <= 1e-7
    assert res.gap <= 1e-7 * max(res.value, 1.0)
    assert np.all(res.extremal.values >= 0)
    doc = json.loads(res.to_json())
    assert set(doc) == {"value", "residual", "gap", "iterations", "converged"}


def test_dilation_law_on_matched_grids():
    # cap(lam E) on the lam-dilated grid equals lam^(n - alpha s) cap(E)
    alpha, s, N = 0.4, 2.0, 128
    base = Params(1, alpha, s)
    cap1 = capacity(ball_mask(Grid(1, 1.0, N), 0.2), base, tol=1e-8).value
    for lam in (0.5, 2.0):
        g = Grid(1, lam * 1.0, N)
        cap_lam = capacity(ball_mask(g, lam * 0.2), base, tol=1e-8).value
        assert abs(cap_lam / (lam ** (1 - alpha * s) * cap1) - 1) <= 0.03


def test_capacity_monotone_and_subadditive(g64, params):
    tol = 1e-7
    A = ball_mask(g64, 0.12)
    B = ball_mask(g64, 0.25)
    C = cube_mask(g64, 0.3, center=[0.4])
    capA = capacity(A, params, tol=tol).value
    capB = capacity(B, params, tol=tol).value
    capBC = capacity(B | C, params, tol=tol).value
    capC = capacity(C, params, tol=tol).value
    assert capA <= capB + 2 * tol
    assert capB <= capBC + 2 * tol
    assert capBC <= capB + capC + 4 * tol


def test_extremal_uniqueness_across_initializations(params):
    g = Grid(1, 1.0, 128)
    E = ball_mask(g, 0.2)
    tol = 1e-6
    r1 = capacity(E, params, tol=tol)
    from capax.capacity import CapacityResult

    warm_start = CapacityResult(
        value=0.0, extremal=Field(g, np.full(g.shape, 0.5), nonneg=True),
        feasibility_residual=0.0, gap=0.0, iterations=0, converged=False, dual=None)
    r2 = capacity(E, params, tol=tol, warm=warm_start)
    dist = (g.spacing * np.sum(np.abs(r1.extremal.values - r2.extremal.values) ** params.s)) \
        ** (1 / params.s)
    assert dist <= 10 * tol


def test_lebesgue_lower_bound_stability():
    # |E|^(1 - alpha s / n) <= c * cap(E) with a grid-stable best constant
    alpha, s = 0.4, 2.0
    P = Params(1, alpha, s)
    exponent = 1 - alpha * s
    cs = []
    for N in (64, 128):
        g = Grid(1, 1.0, N)
        ratios = []
        for R in (0.1, 0.2, 0.35):
            E = ball_mask(g, R)
            ratios.append(E.measure**exponent / capacity(E, P, tol=1e-7).value)
        cs.append(max(ratios))
    assert all(math.isfinite(c) for c in cs)
    assert abs(cs[1] / cs[0] - 1) <= 0.25


def test_choquet_layer_cake_identities(g64, params):
    tol = 1e-8
    E = ball_mask(g64, 0.25)
    capE = capacity(E, params, tol=tol).value
    assert abs(choquet_integral(E.indicator(), params, tol=tol) - capE) <= 2 * tol
    scaled = Field(g64, 3.7 * E.members, nonneg=True)
    assert abs(choquet_integral(scaled, params, tol=tol) - 3.7 * capE) <= 3.7 * 2 * tol

    A, B = ball_mask(g64, 0.12), ball_mask(g64, 0.3)
    two = Field(g64, A.members + B.members.astype(float), nonneg=True)
    capA = capacity(A, params, tol=tol).value
    capB = capacity(B, params, tol=tol).value
    got = choquet_integral(two, params, tol=tol)
    assert abs(got / (capA + capB) - 1) <= 0.01


def test_choquet_rejects_negative(g64, params):
    with pytest.raises(ValueError):
        choquet_integral(Field(g64, -np.ones(g64.shape)), params)


def test_choquet_level_doubling(params):
    g = Grid(1, 1.0, 128)
    bump = Field(g, np.exp(-g.axis**2 / (2 * 0.15**2)), nonneg=True)
    v = riesz_potential(bump, params.alpha).values
    field = Field(g, v**2, nonneg=True)
    c48 = choquet_integral(field, params, levels=48, tol=1e-7)
    c96 = choquet_integral(field, params, levels=96, tol=1e-7)
    assert abs(c96 / c48 - 1) <= 0.005


def test_choquet_monotone(g64, params):
    rng = np.random.default_rng(4)
    a = rng.uniform(0, 1, g64.shape)
    b = a + rng.uniform(0, 0.5, g64.shape)
    ca = choquet_integral(Field(g64, a, nonneg=True), params, levels=24, tol=1e-7)
    cb = choquet_integral(Field(g64, b, nonneg=True), params, levels=24, tol=1e-7)
    assert ca <= cb * (1 + 1e-6)


def test_lq_cap_norm_identities(g64, params):
    tol = 1e-8
    E = ball_mask(g64, 0.25)
    capE = capacity(E, params, tol=tol).value
    q = 1.5
    got = lq_cap_norm(E.indicator(), q, params, tol=tol)
    assert abs(got - capE ** (1 / q)) <= 1e-6
    # exact absolute homogeneity at a power-of-two factor
    u = Field(g64, np.exp(-g64.axis**2 / 0.08), nonneg=True)
    n1 = lq_cap_norm(u, q, params, levels=24, tol=tol)
    n2 = lq_cap_norm(Field(g64, 2.0 * u.values, nonneg=True), q, params, levels=24, tol=tol)
    assert n2 == 2.0 * n1


def test_lq_cap_norm_vs_csim_constant(g64, params, rng):
    f = Field(g64, rng.uniform(0, 1, g64.shape), nonneg=True)
    v = riesz_potential(f, params.alpha)
    s = params.s
    lq = lq_cap_norm(v, s, params, levels=32, tol=1e-7)
    from capax.grid import lp_norm

    ratio = lq**s / lp_norm(f, s) ** s
    assert math.isfinite(ratio) and ratio > 0


def test_f_norm_zero_and_indicator(g64, params):
    z = Field(g64, np.zeros(g64.shape))
    est = f_norm(z, Params(1, 0.4, 2.0, r=1.3))
    assert est.upper == 0.0
    P = Params(1, 0.4, 2.0, r=1.3)
    E = ball_mask(g64, 0.25)
    capE = capacity(E, P, tol=1e-8).value
    c = 2.0
    est2 = f_norm(Field(g64, c * E.members), P, tol=1e-8)
    assert abs(est2.upper / (c * capE ** (P.r / P.s)) - 1) <= 0.03
    assert est2.lower <= est2.upper
    assert est2.details["converged"]


def test_f_norm_sandwich_with_lq_cap(g64):
    # the obstacle norm is equivalent to the L^(s/r)(cap) quasi-norm
    P = Params(1, 0.4, 2.0, r=1.0)
    rng = np.random.default_rng(12)
    ratios = []
    for _ in range(4):
        u = Field(g64, rng.uniform(0, 1, g64.shape) ** 2, nonneg=True)
        fn = f_norm(u, P, tol=1e-7).upper
        lq = lq_cap_norm(u, P.s / P.r, P, levels=24, tol=1e-7)
        ratios.append(fn / lq)
    assert all(0.1 <= r <= 10 for r in ratios)
    assert max(ratios) / min(ratios) <= 5.0


def test_norm_estimate_validation():
    with pytest.raises(ValueError):
        NormEstimate(2.0, 1.0)
    est = NormEstimate(1.0, 2.0, flags=("heuristic-lower",))
    doc = json.loads(est.to_json())
    assert doc["heuristic_flags"] == ["heuristic-lower"]


def test_solver_budget_degradation(g64, params):
    res = capacity(ball_mask(g64, 0.25), params, tol=1e-12, max_iter=30)
    assert not res.converged
    assert res.value > 0 and math.isfinite(res.gap)
