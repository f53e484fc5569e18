import numpy as np
import pytest

from snapspiral.continuation import SolverSettings, newton_correct
from snapspiral.errors import SpecificationError
from snapspiral.model import BeamMesh, Material, RigidLink, Section
from snapspiral.system import LoadingAttachment, ReducedSystem, negative_eigs
from snapspiral.verification import vonmises_mesh, vonmises_system


def test_prescribed_control_moves_master():
    system = vonmises_system()
    q, ev = newton_correct(system, 1.0, None, SolverSettings())
    mesh = system.mesh
    apex = mesh.tags["apex"]
    assert ev.u_full[mesh.dof(apex, 1)] == pytest.approx(1.0, abs=1e-10)


def test_reaction_is_energy_slope():
    """h * r_full equals dE/dlam along the prescribed motion."""
    system = vonmises_system()
    settings = SolverSettings()
    h = 1e-5
    lam = 1.3
    qm, evm = newton_correct(system, lam - h, None, settings)
    qp, evp = newton_correct(system, lam + h, qm, settings)
    mesh = system.mesh
    fd = (mesh.strain_energy(evp.u_full) - mesh.strain_energy(evm.u_full)) / (2 * h)
    _, ev = newton_correct(system, lam, qp, settings)
    assert ev.reaction == pytest.approx(fd, rel=1e-5)


def test_constrained_master_translation_rejected():
    mesh = vonmises_mesh()
    fixed = [mesh.dof(n, c) for n in (0, 1) for c in (0, 1)]
    fixed += [mesh.dof(n, 2) for n in (0, 1, 2)]
    fixed.append(mesh.dof(2, 1))  # apex V is the loading master translation
    with pytest.raises(SpecificationError):
        ReducedSystem(mesh, fixed_dofs=fixed,
                      loading=LoadingAttachment(mode="vertical", master=2,
                                                offset=np.zeros(2)))


def test_rigid_link_slave_follows_master():
    mat, sec = Material(), Section()
    nodes = np.array([[0.0, 0.0], [10.0, 0.0], [14.0, 0.0]])
    mesh = BeamMesh(nodes, [(0, 1, mat, sec, "beam")],
                    rigid_links=[RigidLink(master=1, slave=2,
                                           offset=np.array([4.0, 0.0]))])
    system = ReducedSystem(mesh, fixed_dofs=[0, 1, 2],
                           loading=LoadingAttachment(mode="vertical", master=1,
                                                     offset=np.zeros(2)))
    q, ev = newton_correct(system, 2.0, None, SolverSettings())
    u = ev.u_full
    th = u[mesh.dof(1, 2)]
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    expect = nodes[1] + u[3:5] + R @ np.array([4.0, 0.0])
    got = nodes[2] + u[6:8]
    assert np.allclose(got, expect, atol=1e-9)
    assert u[mesh.dof(2, 2)] == pytest.approx(th, abs=1e-12)


def test_negative_eigs_zero_at_stable_rest():
    system = vonmises_system()
    q, ev = newton_correct(system, 0.5, None, SolverSettings())
    assert negative_eigs(ev.tangent) == 0


def test_released_system_drops_loading():
    system = vonmises_system()
    released = system.released()
    q, ev = newton_correct(released, 0.0, None, SolverSettings())
    assert abs(ev.reaction) < 1e-12
    assert np.allclose(ev.u_full, 0.0, atol=1e-10)


def test_reduce_state_round_trip():
    system = vonmises_system()
    q, ev = newton_correct(system, 1.7, None, SolverSettings())
    q2 = system.reduce_state(ev.u_full)
    assert np.allclose(system.full_state(q2, 1.7), ev.u_full, atol=1e-9)
