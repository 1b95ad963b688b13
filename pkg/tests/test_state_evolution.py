import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncvxcs.penalty import PenaltySpec, threshold_prox_array
from ncvxcs.replica import solve_saddle, solve_success, stability_lhs
from ncvxcs.schedule import ControlSchedule, lambda_path
from ncvxcs.state_evolution import (GridSpec, InadmissibleState, SeClass, SeOptions, SePoint,
                                    _se_map_scalar, basin_map, default_grid,
                                    find_fixed_points, fixed_point_continuation, flow_field,
                                    jacobian, se_map, se_run, se_run_many, se_step,
                                    se_trajectory, spectral_radius)

SCAD = PenaltySpec("scad", 0.5, 3.0)
MCP = PenaltySpec("mcp", 0.5, 3.0)
L1 = PenaltySpec("l1", 0.5)


def is_class(classes, cls):
    return np.vectorize(lambda c: c is cls, otypes=[bool])(classes)


def mc_se_step(V, eps, p, alpha, rho, sx2=1.0, n=2_000_000, seed=0):
    """Monte-Carlo SE step by sampling the signal and the effective noise."""
    rng = np.random.default_rng(seed)
    x0 = np.where(rng.random(n) < rho, rng.normal(0, math.sqrt(sx2), n), 0.0)
    m = x0 + math.sqrt(eps / alpha) * rng.normal(size=n)
    x, sig = threshold_prox_array(m, V / alpha, p)
    return sig.mean(), np.mean((x - x0) ** 2), n


@pytest.mark.parametrize("p", [SCAD, MCP, L1])
@pytest.mark.parametrize("V,eps", [(0.3, 0.2), (0.8, 0.05), (0.1, 0.5)])
def test_se_map_matches_monte_carlo(p, V, eps):
    alpha, rho = 0.5, 0.2
    vn, en, adm = se_map(V, eps, p, alpha, rho)
    assert adm
    vmc, emc, n = mc_se_step(V, eps, p, alpha, rho)
    assert abs(vn - vmc) < 6 * max(vmc, 1e-3) / math.sqrt(n) * 3
    assert abs(en - emc) < 6 * math.sqrt(2.0 / n) * max(emc, 1e-3) * 3


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([SCAD, MCP, L1, PenaltySpec("scad", 1.3, 7.0), PenaltySpec("mcp", 0.1, 1.5)]),
       st.floats(1e-6, 0.9), st.floats(0.0, 2.0), st.floats(0.2, 0.9), st.floats(0.0, 0.5))
def test_scalar_and_vector_maps_agree(p, V, eps, alpha, rho):
    vn, en, adm = se_map(V, eps, p, alpha, rho)
    sc = _se_map_scalar(V, eps, p, alpha, rho, 1.0)
    if not adm:
        assert sc is None and np.isnan(vn)
        return
    assert sc[0] == pytest.approx(float(vn), rel=1e-12, abs=1e-15)
    assert sc[1] == pytest.approx(float(en), rel=1e-12, abs=1e-15)
    assert vn >= 0 and en >= 0


def test_se_step_inadmissible_raises():
    with pytest.raises(InadmissibleState):
        se_step(SePoint(2.0, 0.1), SCAD, 0.5, 0.2)   # s = 4 > a - 1


@pytest.mark.parametrize("p", [SCAD, MCP, L1])
def test_zero_signal_keeps_eps_zero(p):
    nxt = se_step(SePoint(0.4, 0.0), p, 0.5, 0.0)
    assert nxt.eps == 0.0


@pytest.mark.parametrize("p,alpha,rho", [(SCAD, 0.5, 0.2), (MCP, 0.6, 0.25),
                                         (PenaltySpec("scad", 0.05, 2.0), 0.4, 0.3),
                                         (L1, 0.5, 0.15)])
@pytest.mark.parametrize("chit", [1e-3, 0.05, 1.0])
def test_contraction_factor_is_stability_lhs(p, alpha, rho, chit):
    # near success eps ~ chit V**2 / alpha; V'/V -> ((1-rho) erfc(theta_-) + rho)/alpha
    V = 1e-7
    eps = chit * V * V / alpha
    nxt = se_step(SePoint(V, eps), p, alpha, rho)
    assert nxt.V / V == pytest.approx(stability_lhs(chit, p.lam, alpha, rho), abs=1e-6)


def test_success_trajectory_tail_monotone():
    out = se_run(SePoint(0.2, 0.1), PenaltySpec("scad", 0.5, 3.0), 0.5, 0.1,
                 opts=SeOptions(keep_trace=True))
    assert out.classification is SeClass.SUCCESS
    eps = np.array([pt.eps for pt in out.trace])
    tail = eps[len(eps) // 2:]
    assert np.all(np.diff(tail) <= 0)


@pytest.mark.parametrize("scale", [0.01, 1.0, 100.0])
def test_classification_insensitive_to_thresholds(scale):
    grid = GridSpec(1.2, 0.6, nv=6, ne=6)
    opts = SeOptions(success_tol=1e-10 * scale, divergence=1e8 * scale)
    ref = basin_map(grid, PenaltySpec("scad", 0.3, 3.0), 0.5, 0.25)
    got = basin_map(grid, PenaltySpec("scad", 0.3, 3.0), 0.5, 0.25, opts=opts)
    assert np.array_equal(ref.classes, got.classes)


def test_inadmissible_start_vs_divergence():
    out = se_run(SePoint(2.0, 0.1), SCAD, 0.5, 0.2)
    assert out.classification is SeClass.INADMISSIBLE and out.iters == 0
    out = se_run(SePoint(0.4, 0.4), PenaltySpec("scad", 0.5, 3.0), 0.5, 0.2)
    assert out.classification is SeClass.DIVERGED and out.reason == "admissibility"


def test_run_many_matches_scalar_runs():
    p = PenaltySpec("scad", 0.3, 3.0)
    V0 = np.array([0.05, 0.3, 0.9, 1.5, 2.5])
    E0 = np.array([0.3, 0.2, 0.1, 0.4, 0.1])
    codes, V, E, iters = se_run_many(V0, E0, p, 0.5, 0.25)
    for i in range(len(V0)):
        out = se_run(SePoint(V0[i], E0[i]), p, 0.5, 0.25)
        assert list(SeClass)[codes[i]] is out.classification
        assert iters[i] == out.iters


# -- SE <-> replica --------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.45, 0.5, 0.55])
def test_finite_fixed_point_equals_saddle(alpha):
    p = PenaltySpec("scad", 1.0, 10.0)
    rho = 0.35
    sol = solve_saddle(p, alpha, rho)
    assert sol.status == "converged"
    fps = [f for f in find_fixed_points(p, alpha, rho) if f.stable]
    assert fps
    best = min(fps, key=lambda f: abs(f.V - sol.chi))
    assert best.V == pytest.approx(sol.chi, abs=1e-8)
    assert best.eps == pytest.approx(sol.Q - 2 * sol.m + rho, abs=1e-8)
    assert sol.at_lhs > 1


def test_spectral_radius_of_attracting_point():
    p = PenaltySpec("scad", 1.0, 10.0)
    out = se_run(SePoint(0.7, 0.7), p, 0.5, 0.35, opts=SeOptions(max_iters=20000))
    assert out.classification is SeClass.FINITE
    assert spectral_radius(out.final, p, 0.5, 0.35) < 1
    assert jacobian(out.final, p, 0.5, 0.35).shape == (2, 2)


# -- trajectories under control ------------------------------------------------------

def test_se_trajectory_follows_schedule():
    sch = ControlSchedule.parse("1.0:-0.1:0.1@20", a=3)
    tr = se_trajectory(SePoint(0.28, 0.28), sch, "scad", 0.5, 0.28, n_iters=260)
    assert [t for t, _, _ in tr] == list(range(1, 261))
    assert tr[25][1].lam == pytest.approx(0.9)
    assert tr[-1][2].eps < 1e-8


def test_trajectory_without_control_diverges():
    sch = ControlSchedule.constant(0.1, 3.0)
    tr = se_trajectory(SePoint(0.56, 0.56), sch, "scad", 0.5, 0.28, n_iters=50)
    assert len(tr) < 50     # leaves the admissible strip


# -- grids ------------------------------------------------------------------------

def test_grid_nodes_cell_centred():
    g = GridSpec(1.0, 2.0, nv=4, ne=2)
    V, E, area = g.nodes()
    np.testing.assert_allclose(V[0], [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(E[:, 0], [0.5, 1.5])
    assert area.sum() == pytest.approx(g.area)


@pytest.mark.parametrize("kw", [dict(v_hi=0, e_hi=1), dict(v_hi=1, e_hi=1, nv=0),
                                dict(v_hi=1, e_hi=1, spacing="cubic"),
                                dict(v_hi=1, e_hi=1, spacing="log")])
def test_grid_rejects(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_flow_field(tmp_path):
    ff = flow_field(GridSpec(2.0, 0.5, nv=8, ne=4), SCAD, 0.5, 0.2)
    assert not ff.admissible.all() and ff.admissible.any()
    assert np.isnan(ff.dV[~ff.admissible]).all()
    ux, uy = ff.direction()
    ok = ff.admissible
    np.testing.assert_allclose(np.hypot(ux[ok], uy[ok]), 1.0)
    path = tmp_path / "flow.csv"
    ff.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["V", "eps", "dV", "deps", "admissible"]
    assert len(rows) == 33


def test_basin_outputs(tmp_path):
    bm = basin_map(default_grid(0.5, 0.25, n=8), PenaltySpec("scad", 0.3, 3.0), 0.5, 0.25)
    succ = is_class(bm.classes, SeClass.SUCCESS)
    _, E, area = bm.grid.nodes()
    assert bm.volume == pytest.approx(area[succ].sum())
    assert bm.eps_max == pytest.approx(E[succ].max())
    bm.write_csv(tmp_path / "b.csv")
    bm.write_json(tmp_path / "b.json")
    rows = list(csv.reader(open(tmp_path / "b.csv")))
    assert rows[0] == ["V0", "eps0", "class"] and len(rows) == 65
    summ = json.load(open(tmp_path / "b.json"))
    assert set(summ) == {"volume", "eps_max", "grid", "params"}


def test_l1_basin_everything_succeeds_above_threshold():
    bm = basin_map(default_grid(0.5, 0.15, n=6), L1, 0.5, 0.15)
    assert is_class(bm.classes, SeClass.SUCCESS).all()


# -- continuation --------------------------------------------------------------------

def test_continuation_without_gap(tmp_path):
    cont = fixed_point_continuation(lambda_path(1.0, 0.1, 0.01), 3.0, "scad", 0.5, 0.25)
    assert not cont.has_gap and cont.reached_success
    cont.write_csv(tmp_path / "c.csv")
    rows = list(csv.reader(open(tmp_path / "c.csv")))
    assert rows[0] == ["lambda", "V", "eps", "class", "gap_flag"]
    assert len(rows) == 92


def test_continuation_gap_coarse():
    cont = fixed_point_continuation(lambda_path(1.0, 0.1, 0.01), 3.0, "scad", 0.5, 0.32)
    gaps = cont.gap_intervals()
    assert gaps
    upper, lower = gaps[0]
    assert upper == pytest.approx(0.553, abs=0.02) and lower == pytest.approx(0.2117, abs=0.02)


def test_continuation_rejects_increasing_path():
    with pytest.raises(ValueError):
        fixed_point_continuation([0.1, 0.2], 3.0, "scad", 0.5, 0.3)


@pytest.mark.parametrize("rho", [0.248, 0.256])
def test_continuation_through_branch_merger(rho):
    # the finite branch shrinks into the origin; the approach is extremely slow there
    cont = fixed_point_continuation(lambda_path(1.0, 0.1, 0.002), 3.0, "mcp", 0.5, rho,
                                    stop_on_gap=True, stop_on_success=True)
    assert cont.reached_success and not cont.has_gap
