"""Geometrically nonlinear planar frame model.

Corotational Euler-Bernoulli elements: a linear frame element lives in the
rotating chord frame, which keeps local strains small while allowing
arbitrarily large rigid rotations. Internal forces are the exact gradient of
the strain energy and the tangent is the exact force derivative, which the
test suite checks against central finite differences.

Units are consistent mm / N / MPa / tonne throughout.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import SpecificationError


@dataclass(frozen=True)
class Material:
    youngs_modulus: float = 3500.0  # MPa, typical PLA; always overridable
    density: float = 1.24e-9  # tonne/mm^3, used only for robot mass bookkeeping

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise SpecificationError("youngs_modulus must be > 0")


@dataclass(frozen=True)
class Section:
    """Rectangular section: in-plane thickness h, out-of-plane depth b."""

    in_plane_thickness_h: float = 0.8
    depth_b: float = 10.0

    def __post_init__(self):
        if self.in_plane_thickness_h <= 0 or self.depth_b <= 0:
            raise SpecificationError("section dimensions must be > 0")

    @property
    def area(self) -> float:
        return self.depth_b * self.in_plane_thickness_h

    @property
    def second_moment(self) -> float:
        return self.depth_b * self.in_plane_thickness_h**3 / 12.0


@dataclass
class RigidLink:
    """Slave node rigidly offset from a master; realized by DOF condensation."""

    master: int
    slave: int
    offset: np.ndarray  # rest-frame offset, rotates with the master


class BeamMesh:
    """Nodes, elements and constraint bookkeeping for one structure.

    DOF numbering is (u, v, theta) per node: node i owns global DOFs
    3i, 3i+1, 3i+2.
    """

    def __init__(self, nodes, elements, rigid_links=None, tags=None):
        """``elements`` is a list of (i, j, Material, Section, kind) with
        kind in {"beam", "truss"}; a truss element carries no bending."""
        self.nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
        self.rigid_links = list(rigid_links or [])
        self.tags = dict(tags or {})  # name -> node index

        conn, EA, EI, L0, rho_A, kinds = [], [], [], [], [], []
        self.materials, self.sections = [], []
        for el in elements:
            i, j, mat, sec = el[:4]
            kind = el[4] if len(el) > 4 else "beam"
            if not (0 <= i < len(self.nodes) and 0 <= j < len(self.nodes)):
                raise SpecificationError(f"element ({i},{j}) references missing node")
            rest = np.linalg.norm(self.nodes[j] - self.nodes[i])
            if rest <= 0:
                raise SpecificationError(f"element ({i},{j}) has zero rest length")
            conn.append((i, j))
            EA.append(mat.youngs_modulus * sec.area)
            EI.append(mat.youngs_modulus * sec.second_moment if kind == "beam" else 0.0)
            L0.append(rest)
            rho_A.append(mat.density * sec.area)
            kinds.append(kind)
            self.materials.append(mat)
            self.sections.append(sec)

        self.conn = np.asarray(conn, dtype=np.int64).reshape(-1, 2)
        self.EA = np.asarray(EA)
        self.EI = np.asarray(EI)
        self.L0 = np.asarray(L0)
        self.rho_A = np.asarray(rho_A)
        self.kinds = kinds
        self._check_rigid_links()
        self._scatter = self._build_scatter()

    # -- bookkeeping --------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_dofs(self) -> int:
        return 3 * len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.conn)

    def dof(self, node: int, comp: int) -> int:
        return 3 * node + comp

    def _check_rigid_links(self):
        slaves = set()
        masters = set()
        for link in self.rigid_links:
            if link.slave in slaves:
                raise SpecificationError(f"node {link.slave} is slave of two links")
            slaves.add(link.slave)
            masters.add(link.master)
        if slaves & masters:
            raise SpecificationError("rigid link graph must be flat (acyclic)")

    def _build_scatter(self):
        """Precomputed DOF index maps and fixed CSC sparsity pattern for
        vectorized assembly (entry k of the raveled element tangents lands
        at data slot ``slot[k]`` of the shared CSC structure)."""
        edofs = np.empty((self.n_elements, 6), dtype=np.int64)
        for k, (i, j) in enumerate(self.conn):
            edofs[k] = [3 * i, 3 * i + 1, 3 * i + 2, 3 * j, 3 * j + 1, 3 * j + 2]
        rows = np.repeat(edofs, 6, axis=1).ravel()
        cols = np.tile(edofs, (1, 6)).ravel()

        # CSC data order sorts entries by (col, row); duplicates share a slot
        order = np.lexsort((rows, cols))
        r_s, c_s = rows[order], cols[order]
        new = np.concatenate([[True], (r_s[1:] != r_s[:-1])
                              | (c_s[1:] != c_s[:-1])])
        group = np.cumsum(new) - 1
        slot = np.empty(len(rows), dtype=np.int64)
        slot[order] = group
        indices = r_s[new]
        indptr = np.zeros(self.n_dofs + 1, dtype=np.int64)
        np.add.at(indptr, c_s[new] + 1, 1)
        indptr = np.cumsum(indptr)
        return edofs, rows, cols, slot, indices, indptr

    # -- mechanics ----------------------------------------------------------

    def element_arrays(self, u):
        return kernels.batch_force_tangent(
            self.nodes, self.conn, self.EA, self.EI, self.L0, np.asarray(u, float)
        )

    def internal_force(self, u):
        fel, _ = self.element_arrays(u)
        f = np.zeros(self.n_dofs)
        np.add.at(f, self._scatter[0], fel)
        return f

    def force_full(self, u, ext_loads=None):
        """Full-system residual and force scale without the sparse tangent
        (the cheap evaluation used by modified-Newton correctors)."""
        fel, _ = self.element_arrays(u)
        r = np.zeros(self.n_dofs)
        np.add.at(r, self._scatter[0], fel)
        if ext_loads is not None:
            r = r - ext_loads
        return r, float(np.abs(fel).max(initial=0.0))

    def assemble_full(self, u, ext_loads=None):
        """Full-system residual (f_int - f_ext) and sparse symmetric tangent,
        before any constraint elimination or rigid-link condensation."""
        fel, kel = self.element_arrays(u)
        r = np.zeros(self.n_dofs)
        np.add.at(r, self._scatter[0], fel)
        if ext_loads is not None:
            r = r - ext_loads
        _, _, _, slot, indices, indptr = self._scatter
        data = np.bincount(slot, weights=kel.ravel(), minlength=len(indices))
        K = sp.csc_matrix((data, indices, indptr),
                          shape=(self.n_dofs, self.n_dofs))
        # largest element force component: the roundoff scale of the residual
        force_scale = float(np.abs(fel).max(initial=0.0))
        return r, K, force_scale

    def strain_energy(self, u) -> float:
        return float(
            np.sum(
                kernels.batch_energy(
                    self.nodes, self.conn, self.EA, self.EI, self.L0,
                    np.asarray(u, float),
                )
            )
        )


@dataclass
class State:
    """Nodal displacement vector (u, v in mm; theta in rad), length 3n."""

    displacements: np.ndarray

    def __post_init__(self):
        self.displacements = np.asarray(self.displacements, dtype=float)
        if not np.all(np.isfinite(self.displacements)):
            raise SpecificationError("state contains non-finite entries")


def element_force_and_tangent(rest_coords, material: Material, section: Section,
                              u6, kind="beam"):
    """Internal force (6,) and consistent tangent (6, 6) of one element.

    ``rest_coords`` is (2, 2) rest positions of the two nodes, ``u6`` their
    stacked (u, v, theta) displacements.
    """
    X = np.asarray(rest_coords, dtype=float)
    mesh = BeamMesh(X, [(0, 1, material, section, kind)])
    fel, kel = mesh.element_arrays(np.asarray(u6, dtype=float))
    return fel[0], kel[0]


# ---------------------------------------------------------------------------
# persistence

def mesh_to_dict(mesh: BeamMesh) -> dict:
    return {
        "nodes": mesh.nodes.tolist(),
        "elements": [
            {
                "nodes": [int(i), int(j)],
                "youngs_modulus": mesh.materials[k].youngs_modulus,
                "density": mesh.materials[k].density,
                "thickness_h": mesh.sections[k].in_plane_thickness_h,
                "depth_b": mesh.sections[k].depth_b,
                "kind": mesh.kinds[k],
            }
            for k, (i, j) in enumerate(mesh.conn)
        ],
        "rigid_links": [
            {"master": l.master, "slave": l.slave, "offset": list(map(float, l.offset))}
            for l in mesh.rigid_links
        ],
        "tags": {k: int(v) for k, v in mesh.tags.items()},
    }


def mesh_from_dict(doc: dict) -> BeamMesh:
    elements = [
        (
            e["nodes"][0],
            e["nodes"][1],
            Material(e["youngs_modulus"], e["density"]),
            Section(e["thickness_h"], e["depth_b"]),
            e.get("kind", "beam"),
        )
        for e in doc["elements"]
    ]
    links = [
        RigidLink(l["master"], l["slave"], np.array(l["offset"], dtype=float))
        for l in doc.get("rigid_links", [])
    ]
    return BeamMesh(doc["nodes"], elements, rigid_links=links,
                    tags=doc.get("tags", {}))


def save_mesh_json(mesh: BeamMesh, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(mesh_to_dict(mesh), fh)
        fh.write("\n")
    os.replace(tmp, path)


def load_mesh_json(path: str) -> BeamMesh:
    with open(path) as fh:
        return mesh_from_dict(json.load(fh))
