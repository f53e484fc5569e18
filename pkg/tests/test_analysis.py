import numpy as np
import pytest

from snapspiral.analysis import (
    BISTABLE,
    LOADING,
    MONOSTABLE,
    NON_RECIPROCATING,
    RECIPROCATING,
    UNLOADING,
    EmulatedCurve,
    _stable_arcs,
    classify_stability,
    critical_force,
    emulate_displacement_control,
    emulate_load_control,
    energy_report,
    hausdorff_distance,
    path_energies,
    trajectory_pair,
    walk_stable_branch,
)
from snapspiral.errors import EmulationIncompleteError
from snapspiral.verification import TRUSS_RISE, vonmises_limit_load, vonmises_system


# ---------------------------------------------------------------------------
# synthetic-path helpers

def test_stable_arcs_split_on_stability_and_direction():
    c = np.array([0.0, 1.0, 2.0, 1.5, 1.0, 2.0, 3.0])
    neg = np.array([0, 0, 0, 0, 0, 0, 0])
    arcs = _stable_arcs(c, neg)
    assert arcs == [(0, 2), (2, 4), (4, 6)]
    neg = np.array([0, 0, 1, 1, 0, 0, 0])
    arcs = _stable_arcs(c, neg)
    assert arcs == [(0, 1), (4, 6)]


def test_walk_simple_snap():
    """S-shaped path with an unstable middle: one jump per phase."""
    c = np.array([0.0, 1.0, 2.0, 1.5, 1.0, 2.0, 3.0, 4.0])
    r = np.array([0.0, 1.0, 2.0, 1.0, 0.5, 1.5, 2.5, 3.5])
    E = path_energies_from(c, r)
    neg = np.array([0, 0, 0, 1, 1, 0, 0, 0])
    order = list(range(len(c)))
    events = list(walk_stable_branch(c, r, E, neg, order, rising=+1.0))
    kinds = [e[0] for e in events]
    assert kinds.count("jump") == 1
    jump = events[kinds.index("jump")]
    # the jump leaves the end of the first stable arc at control 2.0
    assert c[events[kinds.index("jump") - 1][1]] == pytest.approx(2.0)
    assert jump[3] >= 0.0  # released energy is never negative
    # the walk reaches the terminal point
    assert events[-1][1] == len(c) - 1


def path_energies_from(c, r):
    inc = 0.5 * (r[1:] + r[:-1]) * np.diff(c)
    return np.concatenate([[0.0], np.cumsum(inc)])


def test_walk_raises_without_landing():
    c = np.array([0.0, 1.0, 2.0, 3.0])
    r = np.array([0.0, 1.0, 2.0, 3.0])
    E = path_energies_from(c, r)
    neg = np.array([0, 0, 1, 1])  # terminal region unstable: nowhere to land
    with pytest.raises(EmulationIncompleteError):
        list(walk_stable_branch(c, r, E, neg, list(range(4)), rising=+1.0))


# ---------------------------------------------------------------------------
# truss-based end-to-end checks

@pytest.fixture(scope="module")
def truss(truss_traced):
    return truss_traced


def test_truss_displacement_control_reciprocates(truss):
    curve = emulate_displacement_control(truss, 2.0 * TRUSS_RISE)
    assert not curve.jumps
    lam_l, f_l = curve.phase_arrays(LOADING)
    lam_u, f_u = curve.phase_arrays(UNLOADING)
    assert len(lam_l) and len(lam_u)
    # unloading retraces loading exactly (elastic, fold-free in control)
    fi = np.interp(lam_l, lam_u[::-1], f_u[::-1])
    assert np.max(np.abs(fi - f_l)) < 1e-6 * np.max(np.abs(f_l))


def test_truss_load_control_jumps(truss):
    curve = emulate_load_control(truss)
    phases = {j.phase for j in curve.jumps}
    assert phases == {LOADING, UNLOADING}
    EA = 3500.0 * 2.0 * 10.0  # truss oracle section: h=2 mm, b=10 mm
    limit = vonmises_limit_load(EA)
    loading_jump = [j for j in curve.jumps if j.phase == LOADING][0]
    assert loading_jump.force_before == pytest.approx(limit, rel=1e-3)
    assert loading_jump.released_energy > 0.0


def test_energy_report_closure(truss):
    curve = emulate_displacement_control(truss, 2.0 * TRUSS_RISE)
    report = energy_report(curve, truss)
    gap = abs(report.work_in - report.work_returned
              - report.released_during_loading
              - report.released_during_unloading)
    assert gap <= 1e-3 * max(1.0, report.work_in)
    assert report.dissipation_ratio == pytest.approx(0.0, abs=1e-6)


# ---------------------------------------------------------------------------
# classification and trajectories

def test_classify_stability():
    assert classify_stability([(0.0, True)]) == MONOSTABLE
    assert classify_stability([(0.0, True), (5.0, False),
                               (9.0, True)]) == BISTABLE


def test_critical_force_first_local_max():
    curve = EmulatedCurve()
    for lam, f in [(0.0, 0.0), (1.0, 2.0), (2.0, 1.0), (3.0, 5.0)]:
        curve.samples.append((lam, f, LOADING))
    assert critical_force(curve) == 2.0


def test_trajectory_pair_classes():
    t = np.linspace(0.0, np.pi, 64)
    arc_up = np.column_stack([np.cos(t), np.sin(t)])
    arc_down = np.column_stack([np.cos(t), -np.sin(t)])
    pair = trajectory_pair(arc_up, arc_down[::-1], stroke=2.0)
    assert pair.reciprocity_class == NON_RECIPROCATING
    assert pair.enclosed_area == pytest.approx(np.pi, rel=0.01)

    line = np.column_stack([t, t])
    pair = trajectory_pair(line, line[::-1], stroke=10.0)
    assert pair.reciprocity_class == RECIPROCATING
    assert pair.enclosed_area == pytest.approx(0.0, abs=1e-9)


def test_hausdorff_distance():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert hausdorff_distance(a, b) == pytest.approx(1.0)
    assert hausdorff_distance(a, a) == 0.0
