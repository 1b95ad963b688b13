import csv
import math

import numpy as np
import pytest

from ncvxcs.amp import (V_FLOOR, AmpOptions, AmpStatus, amp_run, success_indicator)
from ncvxcs.instance import EnsembleParams, gen_instance
from ncvxcs.penalty import PenaltySpec
from ncvxcs.schedule import ControlSchedule, Segment
from ncvxcs.state_evolution import SePoint, se_trajectory


@pytest.fixture(scope="module")
def inst_l1():
    return gen_instance(EnsembleParams(2000, 0.5, 0.1, seed=1))


@pytest.fixture(scope="module")
def inst_hard():
    return gen_instance(EnsembleParams(2000, 0.5, 0.28, seed=0))


def test_zero_signal_converges_first_step():
    inst = gen_instance(EnsembleParams(200, 0.5, 0.0))
    rep = amp_run(inst, PenaltySpec("scad", 0.5, 3.0))
    assert rep.status is AmpStatus.CONVERGED
    assert rep.iterations == 1 and rep.trajectory[0].t == 1
    assert rep.final_mse == 0.0 and success_indicator(rep)
    assert rep.clamp_events == [1]


def test_convergence_only_checked_in_final_segment():
    inst = gen_instance(EnsembleParams(200, 0.5, 0.0))
    sch = ControlSchedule((Segment(1.0, 3.0, 5), Segment(0.5, 3.0, 1)))
    rep = amp_run(inst, sch, "scad")
    assert rep.status is AmpStatus.CONVERGED
    assert rep.iterations == 6
    assert [r.lam for r in rep.trajectory] == [1.0] * 5 + [0.5]


def test_l1_recovers_above_threshold(inst_l1):
    rep = amp_run(inst_l1, PenaltySpec("l1", 1.0))
    assert rep.status is AmpStatus.CONVERGED
    assert rep.final_mse <= 1e-8 and success_indicator(rep)


def test_damping_still_converges(inst_l1):
    rep = amp_run(inst_l1, PenaltySpec("l1", 1.0), opts=AmpOptions(damping=0.8))
    assert success_indicator(rep)


def test_naive_scad_hits_admissibility(inst_hard):
    rep = amp_run(inst_hard, PenaltySpec("scad", 0.1, 3.0))
    assert rep.status is AmpStatus.ADMISSIBILITY
    assert rep.violation_t == rep.iterations + 1
    assert rep.final_mse > 1e-2 and not success_indicator(rep)


def test_early_iterations_follow_se(inst_hard):
    sch = ControlSchedule.parse("1.0:-0.1:0.1@20", a=3)
    rep = amp_run(inst_hard, sch, "scad", AmpOptions(max_iters=40))
    start = SePoint(0.5 * rep.initial.V_hat, rep.initial.mse)
    se = se_trajectory(start, sch, "scad", 0.5, 0.28, n_iters=40)
    # N=2000 carries a finite-size excess of ~20% in mse; this only guards against gross
    # errors (a missing Onsager term loses tracking entirely)
    mse = np.array([r.mse for r in rep.trajectory])
    V = 0.5 * np.array([r.V_hat for r in rep.trajectory])
    eps_se = np.array([pt.eps for _, _, pt in se])
    V_se = np.array([pt.V for _, _, pt in se])
    assert np.mean(np.abs(mse - eps_se) / eps_se) < 0.35
    assert np.mean(np.abs(V - V_se) / V_se) < 0.2


def test_initial_variance(inst_hard):
    rep = amp_run(inst_hard, PenaltySpec("scad", 1.0, 3.0), opts=AmpOptions(max_iters=1))
    assert rep.initial.V_hat == pytest.approx(0.28 / 0.5)
    assert rep.initial.mse == pytest.approx(np.mean(inst_hard.x0 ** 2))
    rep = amp_run(inst_hard, PenaltySpec("scad", 1.0, 3.0),
                  opts=AmpOptions(max_iters=1, v_init=0.5))
    assert rep.initial.V_hat == pytest.approx(1.0)


def test_max_iters_status(inst_hard):
    rep = amp_run(inst_hard, PenaltySpec("scad", 1.0, 3.0), opts=AmpOptions(max_iters=3))
    assert rep.status is AmpStatus.MAX_ITERS and rep.iterations == 3


def test_trajectory_csv(tmp_path, inst_l1):
    rep = amp_run(inst_l1, PenaltySpec("l1", 1.0), opts=AmpOptions(max_iters=5))
    path = tmp_path / "traj.csv"
    rep.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "lambda", "a", "mse", "V_hat", "residual"]
    assert len(rows) == 6 and rows[1][0] == "1"
    assert float(rows[-1][3]) == rep.final_mse    # 17 digits round-trip exactly


def test_deterministic(inst_l1):
    a = amp_run(inst_l1, PenaltySpec("l1", 1.0), opts=AmpOptions(max_iters=10))
    b = amp_run(inst_l1, PenaltySpec("l1", 1.0), opts=AmpOptions(max_iters=10))
    assert a.trajectory == b.trajectory


@pytest.mark.parametrize("kw", [dict(max_iters=0), dict(damping=0.0), dict(damping=1.5)])
def test_options_rejected(kw):
    with pytest.raises(ValueError):
        AmpOptions(**kw)


def test_floor_value():
    assert V_FLOOR == 1e-300 and math.isfinite(1.0 / V_FLOOR)
