"""Reduced equilibrium system: constraint elimination, rigid-link condensation
and the loading linkage, all folded into one differentiable map

    u_full = u(q, lam)

where q are the reduced unknowns and lam the control parameter (crosshead
displacement). Rigid links and the pinned loading bar are eliminated exactly
(no penalties): slave coordinates are explicit large-rotation functions of
their master's DOFs, and the bar replaces the grabbed node's translations by
a single bar-angle DOF. The reduced tangent therefore includes the
second-order (geometric) terms of the map, verified against finite
differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import SpecificationError
from .model import BeamMesh

U, V, TH = 0, 1, 2


@dataclass
class LoadingAttachment:
    """How the control parameter grabs the structure.

    mode "bar": a rigid two-pin bar of length ``bar_length`` hangs from a
    crosshead straight above the attachment point's rest position; the
    crosshead's vertical position is the control. The attachment point
    itself is the ``master`` node offset by ``offset`` in the master's
    rotating frame (offset (0,0) grabs the master directly).

    mode "vertical": the attachment point's vertical displacement is the
    control directly; its horizontal motion stays free.
    """

    mode: str  # "bar" | "vertical"
    master: int
    offset: np.ndarray
    bar_length: float = 80.0

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float)
        if self.mode not in ("bar", "vertical"):
            raise SpecificationError(f"unknown loading mode {self.mode!r}")
        if self.mode == "bar" and self.bar_length <= 0:
            raise SpecificationError("bar_length must be > 0 in bar mode")


def _rot(th):
    c, s = math.cos(th), math.sin(th)
    return np.array([[c, -s], [s, c]])


def _rot_d(th):
    c, s = math.cos(th), math.sin(th)
    return np.array([[-s, -c], [c, -s]])


@dataclass
class SystemEval:
    """One evaluation of the reduced system at (q, lam)."""

    u_full: np.ndarray
    residual: np.ndarray
    tangent: sp.csc_matrix
    dresidual_dlam: np.ndarray
    reaction: float
    force_scale: float = 0.0


class ReducedSystem:
    def __init__(self, mesh: BeamMesh, fixed_dofs=(), prescribed=None,
                 loading: LoadingAttachment = None, ext_loads=None):
        self.mesh = mesh
        self.loading = loading
        self.ext_loads = None if ext_loads is None else np.asarray(ext_loads, float)
        self.prescribed = dict(prescribed or {})  # dof -> value per unit lam

        n = mesh.n_dofs
        eliminated = set(int(d) for d in fixed_dofs)
        if eliminated & set(self.prescribed):
            raise SpecificationError("a DOF cannot be both fixed and prescribed")
        self.fixed = set(eliminated)
        eliminated |= set(self.prescribed)

        self.slave_dofs = set()
        for link in mesh.rigid_links:
            for comp in (U, V, TH):
                self.slave_dofs.add(mesh.dof(link.slave, comp))
        if self.slave_dofs & eliminated:
            raise SpecificationError("slave DOFs cannot carry constraints")
        eliminated |= self.slave_dofs

        self.master_elim = set()
        if loading is not None:
            m = loading.master
            if mesh.dof(m, U) in eliminated or mesh.dof(m, V) in eliminated:
                raise SpecificationError(
                    "loading master translations are already constrained"
                )
            if loading.mode == "bar":
                self.master_elim = {mesh.dof(m, U), mesh.dof(m, V)}
            else:
                self.master_elim = {mesh.dof(m, V)}
            eliminated |= self.master_elim
        if self.ext_loads is not None and np.any(
            self.ext_loads[sorted(eliminated | self.fixed)] != 0.0
        ):
            raise SpecificationError("external load applied to a non-free DOF")

        self.free = np.array(
            [d for d in range(n) if d not in eliminated], dtype=np.int64
        )
        self.col_of = {int(d): k for k, d in enumerate(self.free)}
        self.n_free = len(self.free)
        self.has_bar = loading is not None and loading.mode == "bar"
        self.n_red = self.n_free + (1 if self.has_bar else 0)
        self.bar_col = self.n_free if self.has_bar else None

        if loading is not None:
            th_dof = mesh.dof(loading.master, TH)
            self.master_th_col = self.col_of.get(th_dof)
            if self.master_th_col is None and np.any(loading.offset != 0.0):
                raise SpecificationError(
                    "loading master rotation must be free for an offset grab"
                )

        # constant part of the lam-derivative of the full state
        self.h = np.zeros(n)
        for d, coeff in self.prescribed.items():
            self.h[d] = coeff
        if loading is not None:
            self.h[mesh.dof(loading.master, V)] = 1.0
            for link in mesh.rigid_links:
                if link.master == loading.master:
                    self.h[mesh.dof(link.slave, V)] = 1.0

    # -- the map q, lam -> full state ---------------------------------------

    def rest_q(self) -> np.ndarray:
        return np.zeros(self.n_red)

    def full_state(self, q, lam: float) -> np.ndarray:
        mesh = self.mesh
        u = np.zeros(mesh.n_dofs)
        u[self.free] = q[: self.n_free]
        for d, coeff in self.prescribed.items():
            u[d] = coeff * lam

        if self.loading is not None:
            m = self.loading.master
            th = u[mesh.dof(m, TH)]
            d = self.loading.offset
            if self.loading.mode == "bar":
                phi = q[self.bar_col]
                Lb = self.loading.bar_length
                X_m = mesh.nodes[m]
                x_att = X_m + d + np.array([0.0, Lb + lam]) \
                    + Lb * np.array([math.sin(phi), -math.cos(phi)])
                x_m = x_att - _rot(th) @ d
                u[mesh.dof(m, U)] = x_m[0] - X_m[0]
                u[mesh.dof(m, V)] = x_m[1] - X_m[1]
            else:
                u[mesh.dof(m, V)] = lam - ((_rot(th) @ d)[1] - d[1])

        for link in mesh.rigid_links:
            mm = link.master
            th = u[mesh.dof(mm, TH)]
            shift = _rot(th) @ link.offset - link.offset
            u[mesh.dof(link.slave, U)] = u[mesh.dof(mm, U)] + shift[0]
            u[mesh.dof(link.slave, V)] = u[mesh.dof(mm, V)] + shift[1]
            u[mesh.dof(link.slave, TH)] = th
        return u

    def _master_rows(self, q):
        """Jacobian rows (as dicts col -> value) of every master-node DOF."""
        mesh = self.mesh
        rows = {}
        if self.loading is None:
            return rows
        m = self.loading.master
        th_dof = mesh.dof(m, TH)
        th = self.full_state(q, 0.0)[th_dof]  # lam-independent
        d = self.loading.offset
        dRd = _rot_d(th) @ d
        if self.loading.mode == "bar":
            phi = q[self.bar_col]
            Lb = self.loading.bar_length
            rows[mesh.dof(m, U)] = {self.bar_col: Lb * math.cos(phi)}
            rows[mesh.dof(m, V)] = {self.bar_col: Lb * math.sin(phi)}
            if self.master_th_col is not None:
                rows[mesh.dof(m, U)][self.master_th_col] = -dRd[0]
                rows[mesh.dof(m, V)][self.master_th_col] = -dRd[1]
        else:
            rows[mesh.dof(m, V)] = (
                {self.master_th_col: -dRd[1]} if self.master_th_col is not None
                else {}
            )
        return rows

    def jacobian(self, q) -> sp.csc_matrix:
        """G = d(u_full)/d(q), sparse (n_full x n_red)."""
        mesh = self.mesh
        data, ri, ci = [], [], []

        def add(row, col, val):
            ri.append(row)
            ci.append(col)
            data.append(val)

        master_rows = self._master_rows(q)
        for dof, row in master_rows.items():
            for col, val in row.items():
                add(dof, col, val)

        u = self.full_state(q, 0.0)
        for link in mesh.rigid_links:
            mm = link.master
            th = u[mesh.dof(mm, TH)]
            dRd = _rot_d(th) @ link.offset
            for comp, extra in ((U, dRd[0]), (V, dRd[1])):
                mdof = mesh.dof(mm, comp)
                base = master_rows.get(mdof)
                if base is None:
                    base = {self.col_of[mdof]: 1.0} if mdof in self.col_of else {}
                for col, val in base.items():
                    add(mesh.dof(link.slave, comp), col, val)
                add(mesh.dof(link.slave, comp), self.master_th_col
                    if mm == getattr(self.loading, "master", None)
                    else self.col_of[mesh.dof(mm, TH)], extra)
            th_col = (self.master_th_col
                      if mm == getattr(self.loading, "master", None)
                      else self.col_of[mesh.dof(mm, TH)])
            add(mesh.dof(link.slave, TH), th_col, 1.0)

        ri = np.concatenate([self.free, np.asarray(ri, dtype=np.int64)])
        ci = np.concatenate([np.arange(self.n_free, dtype=np.int64),
                             np.asarray(ci, dtype=np.int64)])
        data = np.concatenate([np.ones(self.n_free), np.asarray(data)])
        return sp.coo_matrix(
            (data, (ri, ci)), shape=(mesh.n_dofs, self.n_red)
        ).tocsc()

    def _correction(self, q, r_full) -> sp.csc_matrix:
        """Second-order map terms: sum_i r_i * d2(u_full_i)/dq2."""
        mesh = self.mesh
        entries = {}

        def bump(i, j, val):
            entries[(i, j)] = entries.get((i, j), 0.0) + val

        u = self.full_state(q, 0.0)

        # fold slave forces onto their masters, collecting the slave curvature
        folded = {}
        for link in mesh.rigid_links:
            mm = link.master
            th = u[mesh.dof(mm, TH)]
            Rd = _rot(th) @ link.offset
            rs = np.array([r_full[mesh.dof(link.slave, U)],
                           r_full[mesh.dof(link.slave, V)]])
            th_col = (self.master_th_col
                      if mm == getattr(self.loading, "master", None)
                      else self.col_of[mesh.dof(mm, TH)])
            bump(th_col, th_col, -(rs[0] * Rd[0] + rs[1] * Rd[1]))
            acc = folded.setdefault(mm, np.zeros(2))
            acc += rs

        if self.loading is not None:
            m = self.loading.master
            th = u[mesh.dof(m, TH)]
            d = self.loading.offset
            Rd = _rot(th) @ d
            rt = np.array([r_full[mesh.dof(m, U)], r_full[mesh.dof(m, V)]])
            rt = rt + folded.get(m, 0.0)
            tc = self.master_th_col
            if self.loading.mode == "bar":
                phi = q[self.bar_col]
                Lb = self.loading.bar_length
                bump(self.bar_col, self.bar_col,
                     rt[0] * (-Lb * math.sin(phi)) + rt[1] * (Lb * math.cos(phi)))
                if tc is not None:
                    bump(tc, tc, rt[0] * Rd[0] + rt[1] * Rd[1])
            elif tc is not None:
                bump(tc, tc, rt[1] * Rd[1])
        if not entries:
            return sp.csc_matrix((self.n_red, self.n_red))
        keys = list(entries)
        return sp.coo_matrix(
            ([entries[k] for k in keys],
             ([k[0] for k in keys], [k[1] for k in keys])),
            shape=(self.n_red, self.n_red),
        ).tocsc()

    # -- reduced residual / tangent -----------------------------------------

    def assemble(self, q, lam: float, tangent: bool = True) -> SystemEval:
        u = self.full_state(q, lam)
        if not tangent:
            r_full, fscale = self.mesh.force_full(u, self.ext_loads)
            G = self.jacobian(q)
            return SystemEval(u, G.T @ r_full, None, None,
                              float(self.h @ r_full), fscale)
        r_full, K_full, fscale = self.mesh.assemble_full(u, self.ext_loads)
        G = self.jacobian(q)
        r = G.T @ r_full
        K = (G.T @ (K_full @ G) + self._correction(q, r_full)).tocsc()
        p = G.T @ (K_full @ self.h)
        reaction = float(self.h @ r_full)
        return SystemEval(u, r, K, np.asarray(p).ravel(), reaction, fscale)

    def released(self) -> "ReducedSystem":
        """Same structure with the loading linkage removed (free structure)."""
        return ReducedSystem(self.mesh, fixed_dofs=sorted(self.fixed),
                             prescribed=self.prescribed, loading=None,
                             ext_loads=self.ext_loads)

    def reduce_state(self, u_full) -> np.ndarray:
        """Reduced coordinates matching a full displacement vector.

        Only valid when the reduced vector is a plain sub-selection of the
        full one (no bar angle DOF), e.g. on a released system.
        """
        if self.has_bar:
            raise SpecificationError("reduce_state is ambiguous with a bar DOF")
        return np.asarray(u_full, dtype=float)[self.free]

    def reference_force(self) -> float:
        """Mesh-independent force scale: a tiny prescribed strain's force."""
        return float(np.max(self.mesh.EA / self.mesh.L0)) * 1e-6

    def strain_energy(self, q, lam: float) -> float:
        return self.mesh.strain_energy(self.full_state(q, lam))


def factorize(K: sp.csc_matrix):
    """Accurate sparse LU of the tangent for Newton solves (partial
    pivoting; does not expose inertia)."""
    return splu(K.tocsc())


def negative_eigs(K: sp.csc_matrix, lu=None) -> int:
    """Count of negative eigenvalues (inertia) of the symmetric tangent.

    Uses a separate SuperLU factorization in symmetric mode with pure
    diagonal pivoting, which is an LDL-style decomposition whose U diagonal
    carries the matrix inertia (Sylvester's law). The ``lu`` argument is
    ignored; it exists so call sites can pass their solving factorization
    without caring which one counts."""
    del lu
    ldl = splu(
        K.tocsc(),
        diag_pivot_thresh=0.0,
        permc_spec="MMD_AT_PLUS_A",
        options={"SymmetricMode": True},
    )
    return int(np.sum(ldl.U.diagonal() < 0.0))
