import math

import numpy as np
import pytest

from snapspiral.continuation import (
    DISPLACEMENT_LIMIT,
    FORCE_LIMIT,
    SolverSettings,
    arc_length_trace,
    find_free_equilibria,
    load_path_csv,
    save_path_csv,
)
from snapspiral.model import Material, Section
from snapspiral.verification import (
    TRUSS_RISE,
    euler_oracle,
    vonmises_force,
    vonmises_limit_load,
    vonmises_system,
)


@pytest.fixture(scope="module")
def truss_trace():
    system = vonmises_system()
    path = arc_length_trace(system, 2.5 * TRUSS_RISE, SolverSettings(),
                            metadata={"scenario": "truss"})
    return system, path


def test_truss_s_curve_folds(truss_trace):
    _, path = truss_trace
    kinds = [f.kind for f in path.folds]
    assert kinds.count(FORCE_LIMIT) == 2
    assert DISPLACEMENT_LIMIT not in kinds
    assert path.complete


def test_truss_limit_load_matches_analytic(truss_trace):
    system, path = truss_trace
    EA = system.mesh.EA[0]
    limit = max(f.reaction for f in path.folds)
    assert limit == pytest.approx(vonmises_limit_load(EA), rel=1e-4)


def test_truss_path_on_analytic_curve(truss_trace):
    system, path = truss_trace
    EA = system.mesh.EA[0]
    c = path.controls()
    r = path.reactions()
    exact = vonmises_force(c, EA)
    assert np.max(np.abs(r - exact)) <= 1e-6 * np.max(np.abs(exact))


def test_truss_displacement_control_is_stable(truss_trace):
    """Under displacement control the whole S-curve is stable; the snap is
    a load-control phenomenon."""
    _, path = truss_trace
    assert set(path.stability()) == {0}
    assert path.controls()[-1] >= 2.5 * TRUSS_RISE


def test_released_inertia_at_hilltop():
    """The flat (apex on the support line) state of the free truss is the
    energy hilltop: exactly one negative tangent eigenvalue."""
    from snapspiral.continuation import newton_correct
    from snapspiral.system import negative_eigs

    released = vonmises_system().released()
    mesh = released.mesh
    u = np.zeros(mesh.n_dofs)
    u[mesh.dof(2, 1)] = TRUSS_RISE  # lift the apex onto the support line
    q = released.reduce_state(u)
    ev = released.assemble(q, 0.0)
    assert np.max(np.abs(ev.residual)) < 1e-8 * mesh.EA[0]
    assert negative_eigs(ev.tangent) == 1
    ev0 = released.assemble(released.reduce_state(np.zeros(mesh.n_dofs)), 0.0)
    assert negative_eigs(ev0.tangent) == 0


def test_free_equilibria_bistable(truss_trace):
    system, path = truss_trace
    free = find_free_equilibria(system, path, SolverSettings())
    stable = [p.control for p, s in free if s]
    assert len(stable) == 2
    assert stable[0] == pytest.approx(0.0, abs=1e-9)
    assert stable[1] == pytest.approx(2.0 * TRUSS_RISE, rel=1e-6)


def test_euler_buckling_plateau():
    res = euler_oracle()
    assert res.passed, res.line()


def test_path_csv_round_trip(tmp_path, truss_trace):
    system, path = truss_trace
    csv_path = str(tmp_path / "path.csv")
    save_path_csv(path, system, system.mesh.tags["tip"], csv_path)
    again = load_path_csv(csv_path)
    assert np.allclose(again.controls(), path.controls(), atol=0)
    assert np.allclose(again.reactions(), path.reactions(), atol=0)
    assert np.array_equal(again.stability(), path.stability())


def test_trace_determinism():
    system = vonmises_system()
    settings = SolverSettings()
    p1 = arc_length_trace(system, 8.0, settings)
    p2 = arc_length_trace(vonmises_system(), 8.0, settings)
    assert np.array_equal(p1.controls(), p2.controls())
    assert np.array_equal(p1.reactions(), p2.reactions())


def test_fold_resolution():
    """Fold reaction within fold_resolution of the true limit load."""
    system = vonmises_system()
    settings = SolverSettings()
    path = arc_length_trace(system, 2.5 * TRUSS_RISE, settings)
    EA = system.mesh.EA[0]
    limit = max(f.reaction for f in path.folds)
    assert abs(limit - vonmises_limit_load(EA)) <= 10 * settings.fold_resolution
