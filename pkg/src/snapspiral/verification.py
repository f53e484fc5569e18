"""Built-in analytic oracle suite.

Five fast, self-contained checks against closed-form mechanics results:
cantilever tip deflection, pure-bending circular arc, Euler buckling of a
pinned column, the von Mises two-bar truss limit load (plus its
load-control jump energy), and work/strain-energy closure along a traced
path. The CLI ``verify`` command and the test suite both run this module,
so a red oracle means the same thing everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import emulate_load_control
from .continuation import SolverSettings, arc_length_trace, newton_correct
from .model import BeamMesh, Material, Section
from .system import LoadingAttachment, ReducedSystem

U, V, TH = 0, 1, 2


@dataclass
class OracleResult:
    name: str
    measured: float
    expected: float
    error: float  # relative unless noted in ``name``
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag}  {self.name}: measured {self.measured:.6g} "
                f"expected {self.expected:.6g} "
                f"error {self.error:.3g} (tol {self.tolerance:g})")


def _straight_beam(length: float, n_elems: int, material: Material,
                   section: Section, vertical: bool = False,
                   bow: float = 0.0) -> BeamMesh:
    t = np.linspace(0.0, length, n_elems + 1)
    nodes = np.column_stack([np.zeros_like(t), t] if vertical
                            else [t, np.zeros_like(t)])
    if bow:
        nodes[:, 0 if vertical else 1] += bow * np.sin(np.pi * t / length)
    elements = [(i, i + 1, material, section, "beam") for i in range(n_elems)]
    return BeamMesh(nodes, elements)


def cantilever_oracle(n_elems: int = 40) -> OracleResult:
    """Small tip load on a clamped beam against delta = F L^3 / (3 EI)."""
    mat, sec = Material(), Section()
    L = 100.0
    mesh = _straight_beam(L, n_elems, mat, sec)
    EI = mat.youngs_modulus * sec.second_moment
    delta = 0.1  # mm target deflection: deep inside the linear regime
    F = 3.0 * EI * delta / L**3
    loads = np.zeros(mesh.n_dofs)
    loads[mesh.dof(n_elems, V)] = -F
    system = ReducedSystem(mesh, fixed_dofs=[0, 1, 2], ext_loads=loads)
    q, _ = newton_correct(system, 0.0, None, SolverSettings())
    u = system.full_state(q, 0.0)
    measured = -u[mesh.dof(n_elems, V)]
    err = abs(measured - delta) / delta
    return OracleResult("cantilever tip deflection", measured, delta, err, 0.01)


def bending_oracle(n_elems: int = 40, load_steps: int = 12) -> OracleResult:
    """End moment rolling a cantilever into a circular arc.

    A moment M bends the beam to uniform curvature k = M/EI; the analytic
    tip sits at (sin(kL)/k, (1 - cos(kL))/k). The error is the tip position
    gap relative to the beam length.
    """
    mat, sec = Material(), Section()
    L = 100.0
    mesh = _straight_beam(L, n_elems, mat, sec)
    EI = mat.youngs_modulus * sec.second_moment
    k = math.pi / L  # half circle
    M = EI * k
    q = None
    for alpha in np.linspace(1.0 / load_steps, 1.0, load_steps):
        loads = np.zeros(mesh.n_dofs)
        loads[mesh.dof(n_elems, TH)] = alpha * M
        system = ReducedSystem(mesh, fixed_dofs=[0, 1, 2], ext_loads=loads)
        q, _ = newton_correct(system, 0.0, q, SolverSettings())
    u = system.full_state(q, 0.0)
    tip = mesh.nodes[n_elems] + u[3 * n_elems: 3 * n_elems + 2]
    exact = np.array([math.sin(k * L) / k, (1.0 - math.cos(k * L)) / k])
    err = float(np.linalg.norm(tip - exact)) / L
    return OracleResult("pure bending tip position (|gap|/L)",
                        float(np.linalg.norm(tip)),
                        float(np.linalg.norm(exact)), err, 0.005)


def euler_oracle(n_elems: int = 40) -> OracleResult:
    """Pinned-pinned column: post-buckling force plateau vs pi^2 EI / L^2."""
    mat, sec = Material(), Section()
    L = 100.0
    # a small sinusoidal bow selects the first buckling mode
    mesh = _straight_beam(L, n_elems, mat, sec, vertical=True, bow=1e-3)
    top = n_elems
    fixed = [mesh.dof(0, U), mesh.dof(0, V), mesh.dof(top, U)]
    system = ReducedSystem(mesh, fixed_dofs=fixed,
                           prescribed={mesh.dof(top, V): -1.0})
    p_euler = math.pi**2 * mat.youngs_modulus * sec.second_moment / L**2
    # axial shortening at buckling is ~5e-3 mm; trace well past it (the
    # continuation follows the connected imperfect branch through buckling)
    settings = SolverSettings(initial_arc_radius=1e-3,
                              radius_bounds=(1e-6, 5e-3))
    path = arc_length_trace(system, 0.08, settings)
    reaction = path.reactions()[-1]
    err = abs(reaction - p_euler) / p_euler
    return OracleResult("Euler buckling plateau", reaction, p_euler, err, 0.02)


# ---------------------------------------------------------------------------
# von Mises truss

TRUSS_HALF_SPAN = 50.0
TRUSS_RISE = 5.0


def vonmises_mesh(material: Material = None) -> BeamMesh:
    """Two-bar shallow truss: supports at (+-50, 0), apex at (0, -5)."""
    mat = material or Material()
    sec = Section(in_plane_thickness_h=2.0, depth_b=10.0)
    nodes = [(-TRUSS_HALF_SPAN, 0.0), (TRUSS_HALF_SPAN, 0.0),
             (0.0, -TRUSS_RISE)]
    elements = [(0, 2, mat, sec, "truss"), (1, 2, mat, sec, "truss")]
    return BeamMesh(nodes, elements,
                    tags={"apex": 2, "tip": 2,
                          "support_left": 0, "support_right": 1})


def vonmises_system(mesh: BeamMesh = None) -> ReducedSystem:
    mesh = mesh or vonmises_mesh()
    fixed = []
    for node in (0, 1):
        fixed += [mesh.dof(node, U), mesh.dof(node, V)]
    for node in (0, 1, 2):
        fixed.append(mesh.dof(node, TH))  # truss bars carry no moments
    loading = LoadingAttachment(mode="vertical", master=2,
                                offset=np.zeros(2))
    return ReducedSystem(mesh, fixed_dofs=fixed, loading=loading)


def vonmises_force(lam, EA: float) -> np.ndarray:
    """Exact reaction of the symmetric truss at apex lift ``lam``."""
    lam = np.asarray(lam, dtype=float)
    L0 = math.hypot(TRUSS_HALF_SPAN, TRUSS_RISE)
    y = lam - TRUSS_RISE  # apex height above the support line
    L = np.sqrt(TRUSS_HALF_SPAN**2 + y**2)
    # two bars, axial force N = EA (L - L0)/L0, vertical component N * y/L
    return 2.0 * EA * (L - L0) / L0 * y / L


def vonmises_limit_load(EA: float) -> float:
    lam = np.linspace(0.0, TRUSS_RISE, 200001)
    return float(np.max(vonmises_force(lam, EA)))


def trace_vonmises(settings: SolverSettings = None):
    """Traced truss path over control ~[-3, 12.5] mm.

    The forward sweep covers the S-curve and both folds; a short sweep of
    the mirrored truss (apex above the supports), flipped back, extends the
    path to negative control so the load-control snap-back has a landing
    inside the traced range. Both sweeps live on the same static branch, so
    the stitched point list is one continuous path.
    """
    from .continuation import EquilibriumPath, Fold, PathPoint

    system = vonmises_system()
    # a tight arc radius keeps trapezoidal path integrals at oracle accuracy
    settings = settings or SolverSettings(radius_bounds=(1e-4, 0.1))
    fwd = arc_length_trace(system, 2.5 * TRUSS_RISE, settings,
                           metadata={"scenario": "vonmises-truss"})

    mirrored = vonmises_system(vonmises_mesh_mirrored())
    back = arc_length_trace(mirrored, 0.6 * TRUSS_RISE, settings)

    points = []
    n_back = len(back.points)
    for k in range(n_back - 1, 0, -1):  # skip the shared rest point
        p = back.points[k]
        state = None
        if p.state is not None:
            state = p.state.copy()
            state[1::3] *= -1.0  # mirror y displacements
            state[2::3] *= -1.0  # and rotations
        points.append(PathPoint(control=-p.control, reaction=-p.reaction,
                                negative_eigs=p.negative_eigs,
                                arc_coordinate=-p.arc_coordinate,
                                state=state))
    points.extend(fwd.points)
    folds = [Fold(index=f.index + n_back - 1, kind=f.kind,
                  control=f.control, reaction=f.reaction)
             for f in fwd.folds]
    path = EquilibriumPath(points=points, folds=folds,
                           complete=fwd.complete and back.complete,
                           metadata=dict(fwd.metadata))
    return system, path


def vonmises_mesh_mirrored() -> BeamMesh:
    """The same truss flipped about the support line (apex above)."""
    mesh = vonmises_mesh()
    mesh = BeamMesh(mesh.nodes * np.array([1.0, -1.0]),
                    [(0, 2, mesh.materials[0], mesh.sections[0], "truss"),
                     (1, 2, mesh.materials[1], mesh.sections[1], "truss")],
                    tags=dict(mesh.tags))
    return mesh


def vonmises_oracle(settings: SolverSettings = None, traced=None) -> OracleResult:
    system, path = traced or trace_vonmises(settings)
    EA = float(system.mesh.EA[0])
    exact = vonmises_limit_load(EA)
    force_folds = [f for f in path.folds if f.kind == "force_limit"]
    if len(force_folds) < 2:
        return OracleResult("von Mises truss limit load (folds missing)",
                            float(len(force_folds)), 2.0, 1.0, 0.01)
    measured = max(f.reaction for f in force_folds)
    err = abs(measured - exact) / exact
    return OracleResult("von Mises truss limit load", measured, exact,
                        err, 0.01)


def vonmises_jump_oracle(settings: SolverSettings = None, traced=None) -> OracleResult:
    """Load-control jump energy vs the trapezoid area between branches.

    The brute-force oracle integrates the exact F(d) relation: the released
    energy of the snap at the limit load F* is the area between the
    constant-force line and the analytic curve over the jumped interval.
    """
    system, path = traced or trace_vonmises(settings)
    EA = float(system.mesh.EA[0])
    curve = emulate_load_control(path)
    loading_jumps = [j for j in curve.jumps if j.phase == "loading"]
    if not loading_jumps:
        return OracleResult("von Mises load-control jump energy (no jump)",
                            0.0, 1.0, 1.0, 0.01)
    jump = loading_jumps[0]
    f_star = jump.force_before
    lam = np.linspace(0.0, 2.5 * TRUSS_RISE, 200001)
    F = vonmises_force(lam, EA)
    # departure: the limit point (local max before the force reversal)
    i_dep = int(np.argmax(F[lam <= TRUSS_RISE]))
    # landing: the force recrosses f_star from below on the rising branch
    dipped = np.flatnonzero((lam > lam[i_dep]) & (F < f_star))
    after = np.flatnonzero((lam > lam[int(dipped[0])]) & (F >= f_star))
    i_land = int(after[0])
    seg = slice(i_dep, i_land + 1)
    exact = float(np.trapezoid(f_star - F[seg], lam[seg]))
    err = abs(jump.released_energy - exact) / exact
    return OracleResult("von Mises load-control jump energy",
                        jump.released_energy, exact, err, 0.01)


def energy_closure_oracle(settings: SolverSettings = None, traced=None) -> OracleResult:
    """Work integral of the reaction vs exact strain energy along a path."""
    system, path = traced or trace_vonmises(settings)
    c = path.controls()
    r = path.reactions()
    exact = np.array([system.mesh.strain_energy(p.state)
                      for p in path.points])
    work = exact[0] + np.concatenate(
        [[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(c))])
    scale = max(float(np.max(np.abs(exact))), 1e-12)
    err = float(np.max(np.abs(work - exact))) / scale
    return OracleResult("path energy closure (max |work-energy|/max)",
                        err, 0.0, err, 1e-3)


def run_all(settings: SolverSettings = None) -> list:
    """The full oracle suite in a stable order (one shared truss trace)."""
    traced = trace_vonmises(settings)
    return [
        cantilever_oracle(),
        bending_oracle(),
        euler_oracle(),
        vonmises_oracle(settings, traced),
        vonmises_jump_oracle(settings, traced),
        energy_closure_oracle(settings, traced),
    ]
