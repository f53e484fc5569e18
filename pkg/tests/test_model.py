import numpy as np
import pytest

from snapspiral.errors import SingularElementError
from snapspiral.kernels import BACKEND, python_impl
from snapspiral.model import BeamMesh, Material, Section

RNG = np.random.default_rng(42)


def small_mesh(kind="beam"):
    mat = Material()
    sec = Section()
    nodes = np.array([[0.0, 0.0], [10.0, 1.0], [19.0, -2.0], [30.0, 3.0]])
    elements = [(i, i + 1, mat, sec, kind) for i in range(3)]
    return BeamMesh(nodes, elements)


def rand_state(mesh, scale=0.5):
    return scale * RNG.standard_normal(mesh.n_dofs)


def test_force_is_energy_gradient():
    mesh = small_mesh()
    u = rand_state(mesh)
    f = mesh.internal_force(u)
    h = 1e-6
    for k in range(mesh.n_dofs):
        e = np.zeros(mesh.n_dofs)
        e[k] = h
        fd = (mesh.strain_energy(u + e) - mesh.strain_energy(u - e)) / (2 * h)
        assert fd == pytest.approx(f[k], rel=1e-4, abs=1e-5)


def test_tangent_is_force_jacobian_and_symmetric():
    mesh = small_mesh()
    u = rand_state(mesh)
    _, K, _ = mesh.assemble_full(u)
    K = K.toarray()
    assert np.allclose(K, K.T, atol=1e-8 * (1 + abs(K).max()))
    h = 1e-6
    for k in range(mesh.n_dofs):
        e = np.zeros(mesh.n_dofs)
        e[k] = h
        fd = (mesh.internal_force(u + e) - mesh.internal_force(u - e)) / (2 * h)
        assert np.allclose(fd, K[:, k], rtol=1e-4,
                           atol=1e-4 * (1 + abs(K).max()))


def test_frame_indifference():
    """A superposed rigid motion leaves energy and local forces unchanged."""
    mesh = small_mesh()
    u = rand_state(mesh, scale=0.2)
    e0 = mesh.strain_energy(u)

    th = 0.7
    c, s = np.cos(th), np.sin(th)
    R = np.array([[c, -s], [s, c]])
    shift = np.array([3.0, -2.0])
    u_rot = np.empty_like(u)
    for n in range(mesh.n_nodes):
        x = mesh.nodes[n] + u[3 * n: 3 * n + 2]
        u_rot[3 * n: 3 * n + 2] = R @ x + shift - mesh.nodes[n]
        u_rot[3 * n + 2] = u[3 * n + 2] + th
    assert mesh.strain_energy(u_rot) == pytest.approx(e0, rel=1e-10)


def test_truss_element_has_no_bending_energy():
    mesh = small_mesh(kind="truss")
    u = np.zeros(mesh.n_dofs)
    u[2::3] = RNG.standard_normal(mesh.n_nodes)  # pure rotations
    assert mesh.strain_energy(u) == pytest.approx(0.0, abs=1e-12)


def test_truss_axial_energy_analytic():
    mat = Material()
    sec = Section()
    mesh = BeamMesh(np.array([[0.0, 0.0], [100.0, 0.0]]),
                    [(0, 1, mat, sec, "truss")])
    u = np.zeros(6)
    u[3] = 1.0  # stretch by 1 mm
    EA = mat.youngs_modulus * sec.area
    L0 = 100.0
    ul = (101.0**2 - 100.0**2) / (101.0 + 100.0)
    assert mesh.strain_energy(u) == pytest.approx(EA * ul**2 / (2 * L0),
                                                  rel=1e-12)


def test_section_properties():
    sec = Section(in_plane_thickness_h=0.8, depth_b=10.0)
    assert sec.area == pytest.approx(8.0)
    assert sec.second_moment == pytest.approx(10.0 * 0.8**3 / 12.0)


def test_kernel_backends_agree():
    mesh = small_mesh()
    u = rand_state(mesh)
    case = (mesh.nodes, mesh.conn, mesh.EA, mesh.EI, mesh.L0, u)
    f_py, k_py = python_impl.batch_force_tangent(*case)
    e_py = python_impl.batch_energy(*case)
    from snapspiral.kernels import batch_energy, batch_force_tangent

    f, k = batch_force_tangent(*case)
    e = batch_energy(*case)
    assert np.allclose(f, f_py, rtol=1e-12, atol=1e-9)
    assert np.allclose(k, k_py, rtol=1e-12, atol=1e-9)
    assert np.allclose(e, e_py, rtol=1e-12, atol=1e-12)


def test_compiled_backend_active():
    assert BACKEND == "cython"


def test_collapsed_element_raises():
    mesh = small_mesh()
    u = np.zeros(mesh.n_dofs)
    u[3:5] = mesh.nodes[0] - mesh.nodes[1]  # node 1 onto node 0
    with pytest.raises(SingularElementError):
        mesh.strain_energy(u)


def test_large_rotation_energy_wraps():
    """Wrapped local rotations: a full-turn nodal rotation is the identity."""
    mesh = small_mesh()
    u = rand_state(mesh, scale=0.2)
    u2 = u.copy()
    u2[2::3] += 2.0 * np.pi
    assert mesh.strain_energy(u2) == pytest.approx(mesh.strain_energy(u),
                                                   rel=1e-10)
