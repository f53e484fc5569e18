"""Arc-length path continuation through limit points.

Traces complete static equilibrium paths of a reduced system with a
cylindrical (Crisfield) constraint on the combined state/control increment,
adapts the arc radius to the corrector effort, counts negative eigenvalues
of the reduced tangent at every accepted point, and logs force-limit and
displacement-limit folds located by bisection along the arc.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import (
    ConvergenceError,
    FoldSingularityError,
    SpecificationError,
    TraceStalledError,
)
from .system import ReducedSystem, factorize, negative_eigs

FORCE_LIMIT = "force_limit"
DISPLACEMENT_LIMIT = "displacement_limit"


@dataclass(frozen=True)
class SolverSettings:
    residual_tol: float = 1e-8  # relative to the reference force scale
    step_tol: float = 1e-10  # relative Newton-increment fallback criterion
    max_newton_iters: int = 25
    refactor_every: int = 4  # tangent refresh interval (modified Newton)
    initial_arc_radius: float = 0.25
    radius_bounds: tuple = (1e-4, 2.0)
    target_iters: int = 5
    max_steps: int = 20000
    fold_resolution: float = 1e-3  # arc-length bisection resolution, mm

    def __post_init__(self):
        lo, hi = self.radius_bounds
        if not (0 < lo <= hi):
            raise SpecificationError("radius_bounds must satisfy 0 < min <= max")
        if min(self.residual_tol, self.initial_arc_radius) <= 0:
            raise SpecificationError("solver settings must be positive")
        if self.refactor_every < 1:
            raise SpecificationError("refactor_every must be >= 1")


@dataclass
class PathPoint:
    control: float
    reaction: float
    negative_eigs: int
    arc_coordinate: float
    state: np.ndarray = None  # full nodal displacement vector
    q: np.ndarray = None  # reduced coordinates (internal restart data)
    tip: np.ndarray = None  # tip marker position, filled on export/import


@dataclass
class Fold:
    index: int
    kind: str
    control: float
    reaction: float


@dataclass
class EquilibriumPath:
    points: list = field(default_factory=list)
    folds: list = field(default_factory=list)
    complete: bool = True
    warning: str = ""
    metadata: dict = field(default_factory=dict)

    def controls(self):
        return np.array([p.control for p in self.points])

    def reactions(self):
        return np.array([p.reaction for p in self.points])

    def arcs(self):
        return np.array([p.arc_coordinate for p in self.points])

    def stability(self):
        return np.array([p.negative_eigs for p in self.points])

    def node_positions(self, rest_xy, node):
        """Trajectory of one node along the path (rest + displacement)."""
        out = np.empty((len(self.points), 2))
        for k, p in enumerate(self.points):
            out[k] = rest_xy[node] + p.state[3 * node: 3 * node + 2]
        return out


def _tolerance(system, settings, ev) -> float:
    """Force tolerance: relative to the larger of the tiny-strain reference
    scale and the current element force level (the residual's noise floor)."""
    return settings.residual_tol * max(system.reference_force(), ev.force_scale)


def _step_converged(dq_norm, q, settings) -> bool:
    """Increment-based fallback: on fine meshes the assembled residual has a
    roundoff floor above the force tolerance, but a vanishing Newton update
    still certifies the state to solver precision."""
    return dq_norm <= settings.step_tol * max(1.0, float(np.linalg.norm(q)))


def newton_correct(system: ReducedSystem, lam: float, q0=None,
                   settings: SolverSettings = None):
    """Equilibrium state at fixed control via full Newton iteration."""
    settings = settings or SolverSettings()
    q = system.rest_q() if q0 is None else np.array(q0, dtype=float)
    ev = system.assemble(q, lam)
    if np.linalg.norm(ev.residual) <= _tolerance(system, settings, ev):
        return q, ev
    for _ in range(settings.max_newton_iters):
        try:
            lu = factorize(ev.tangent)
            dq = lu.solve(-ev.residual)
        except RuntimeError as exc:
            raise FoldSingularityError(
                f"singular tangent at control {lam:.6g} mm: {exc}"
            ) from exc
        if not np.all(np.isfinite(dq)):
            raise FoldSingularityError(
                f"tangent solve produced non-finite update at control {lam:.6g} mm"
            )
        q = q + dq
        ev = system.assemble(q, lam)
        if (np.linalg.norm(ev.residual) <= _tolerance(system, settings, ev)
                or _step_converged(np.linalg.norm(dq), q, settings)):
            return q, ev
    raise ConvergenceError(
        f"Newton did not reach tolerance in "
        f"{settings.max_newton_iters} iterations at control {lam:.6g} mm "
        f"(residual {np.linalg.norm(ev.residual):.3e})",
        residual_norm=float(np.linalg.norm(ev.residual)),
    )


def _corrector(system, q_prev, lam_prev, dq_pred, dlam_pred, radius, settings):
    """One arc-length step from (q_prev, lam_prev) with the given predictor.

    Returns (q, lam, ev, iters) or raises ConvergenceError.
    """
    Dq = dq_pred.copy()
    Dlam = dlam_pred
    q = q_prev + Dq
    lam = lam_prev + Dlam
    last_update = math.inf
    lu = dq_t = None
    for it in range(settings.max_newton_iters):
        refresh = it % settings.refactor_every == 0
        ev = system.assemble(q, lam, tangent=refresh)
        if (np.linalg.norm(ev.residual) <= _tolerance(system, settings, ev)
                or _step_converged(last_update, q, settings)):
            if ev.tangent is None:
                ev = system.assemble(q, lam)
            return q, lam, ev, it
        try:
            if refresh:
                lu = factorize(ev.tangent)
                dq_t = lu.solve(-ev.dresidual_dlam)
            dq_r = lu.solve(-ev.residual)
        except RuntimeError as exc:
            raise ConvergenceError(f"factorization failed: {exc}")
        if not (np.all(np.isfinite(dq_r)) and np.all(np.isfinite(dq_t))):
            raise ConvergenceError("non-finite corrector solve")

        a = dq_t @ dq_t + 1.0
        b = 2.0 * (dq_t @ (Dq + dq_r) + Dlam)
        c = (Dq + dq_r) @ (Dq + dq_r) + Dlam**2 - radius**2
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            raise ConvergenceError("arc-length constraint has no real root")
        sq = math.sqrt(disc)
        roots = ((-b + sq) / (2 * a), (-b - sq) / (2 * a))

        best = None
        for dl in roots:
            Dq_new = Dq + dq_r + dl * dq_t
            Dlam_new = Dlam + dl
            align = Dq_new @ Dq + Dlam_new * Dlam
            if best is None or align > best[0]:
                best = (align, Dq_new, Dlam_new)
        _, Dq_new, Dlam_new = best
        last_update = math.sqrt(
            float((Dq_new - Dq) @ (Dq_new - Dq)) + (Dlam_new - Dlam) ** 2)
        Dq, Dlam = Dq_new, Dlam_new
        q = q_prev + Dq
        lam = lam_prev + Dlam
    raise ConvergenceError(
        "corrector did not converge", residual_norm=float(np.linalg.norm(ev.residual))
    )


def _make_point(system, q, lam, ev, arc):
    return PathPoint(
        control=float(lam),
        reaction=ev.reaction,
        negative_eigs=negative_eigs(ev.tangent),
        arc_coordinate=float(arc),
        state=ev.u_full,
        q=q.copy(),
    )


def _step_from(system, point, direction, radius, settings):
    """Corrector step of given radius from a path point along a unit
    (dq, dlam) direction; used by fold bisection."""
    dq_pred = direction[0] * radius
    dlam_pred = direction[1] * radius
    q, lam, ev, _ = _corrector(system, point.q, point.control,
                               dq_pred, dlam_pred, radius, settings)
    return q, lam, ev


def _refine_fold(system, p0, direction, gap, values, kind, settings):
    """Ternary search along the arc for the extremum of control (snap-back
    fold) or reaction (force-limit fold) between p0 and p0 + gap."""

    def value_at(s):
        try:
            q, lam, ev = _step_from(system, p0, direction, s, settings)
        except ConvergenceError:
            return None
        val = lam if kind == DISPLACEMENT_LIMIT else ev.reaction
        return val, (q, lam, ev)

    sign = 1.0 if values[1] >= values[0] else -1.0  # extremum is a max if rising
    lo, hi = settings.fold_resolution / 4, gap
    best = None
    for _ in range(60):
        if hi - lo <= settings.fold_resolution:
            break
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        v1 = value_at(m1)
        v2 = value_at(m2)
        if v1 is None or v2 is None:
            break
        if sign * v1[0] < sign * v2[0]:
            lo = m1
            best = v2
        else:
            hi = m2
            best = v1
    if best is None:
        return None
    q, lam, ev = best[1]
    arc = p0.arc_coordinate + (lo + hi) / 2
    return _make_point(system, q, lam, ev, arc)


def arc_length_trace(system: ReducedSystem, stroke: float,
                     settings: SolverSettings = None,
                     metadata: dict = None) -> EquilibriumPath:
    """Trace the equilibrium path from rest until the control has reached
    ``stroke`` on a stable branch (or the step budget runs out)."""
    settings = settings or SolverSettings()
    path = EquilibriumPath(metadata=dict(metadata or {}))
    path.metadata["settings"] = asdict(settings)
    path.metadata["stroke"] = float(stroke)

    q, ev = newton_correct(system, 0.0, None, settings)
    path.points.append(_make_point(system, q, 0.0, ev, 0.0))

    # initial predictor: tangent direction with increasing control
    lu = factorize(ev.tangent)
    dq_t = lu.solve(-ev.dresidual_dlam)
    norm = math.sqrt(dq_t @ dq_t + 1.0)
    dq_dir, dlam_dir = dq_t / norm, 1.0 / norm

    radius = settings.initial_arc_radius
    rmin, rmax = settings.radius_bounds
    lam = 0.0
    arc = 0.0
    prev_dlam = None
    prev_dreac = None

    for _ in range(settings.max_steps):
        ok = False
        while radius >= rmin:
            try:
                q_new, lam_new, ev_new, iters = _corrector(
                    system, q, lam, dq_dir * radius, dlam_dir * radius,
                    radius, settings)
                ok = True
                break
            except (ConvergenceError, FoldSingularityError):
                radius *= 0.5
        if not ok:
            path.complete = False
            raise TraceStalledError(
                f"arc radius underflow at control {lam:.4f} mm", partial_path=path)

        step_dq = q_new - q
        step_dlam = lam_new - lam
        step_len = math.sqrt(step_dq @ step_dq + step_dlam**2)
        arc += step_len
        point = _make_point(system, q_new, lam_new, ev_new, arc)

        prev_point = path.points[-1]
        before = path.points[-2] if len(path.points) >= 2 else prev_point
        dreac = point.reaction - prev_point.reaction
        if prev_dlam is not None and prev_dlam * step_dlam < 0.0:
            _log_fold(system, path, before, point, DISPLACEMENT_LIMIT, settings)
        if prev_dreac is not None and prev_dreac * dreac < 0.0:
            _log_fold(system, path, before, point, FORCE_LIMIT, settings)
        prev_dlam = step_dlam
        prev_dreac = dreac

        path.points.append(point)
        q, lam, ev = q_new, lam_new, ev_new
        dq_dir = step_dq / step_len
        dlam_dir = step_dlam / step_len

        if lam >= stroke and point.negative_eigs == 0:
            return path

        radius = min(rmax, max(rmin, radius * math.sqrt(
            settings.target_iters / max(iters, 1))))

    path.complete = False
    path.warning = f"max_steps={settings.max_steps} exceeded at control {lam:.4f} mm"
    return path


def _log_fold(system, path, before, point, kind, settings):
    """Record a fold inside the two-step bracket (before -> point), refined
    by arc bisection when the corrector cooperates."""
    gap = point.arc_coordinate - before.arc_coordinate
    refined = None
    if before.q is not None and gap > settings.fold_resolution:
        dq = point.q - before.q
        dlam = point.control - before.control
        n = math.sqrt(dq @ dq + dlam**2)
        direction = (dq / n, dlam / n)
        # path.points[-1] is the interior accepted point; its value tells
        # whether the extremum is a max or a min over the bracket
        interior = path.points[-1]
        vals = ((before.control, interior.control)
                if kind == DISPLACEMENT_LIMIT
                else (before.reaction, interior.reaction))
        refined = _refine_fold(system, before, direction, gap, vals, kind,
                               settings)
    if refined is not None:
        # keep arc coordinates monotone: slot the refined point in place
        idx = len(path.points)
        while idx > 0 and path.points[idx - 1].arc_coordinate > refined.arc_coordinate:
            idx -= 1
        path.points.insert(idx, refined)
        path.folds.append(Fold(index=idx, kind=kind,
                               control=refined.control,
                               reaction=refined.reaction))
    else:
        idx = len(path.points) - 1
        path.folds.append(Fold(index=idx, kind=kind,
                               control=path.points[-1].control,
                               reaction=path.points[-1].reaction))


def _released_stability(system: ReducedSystem, u_full, lam: float) -> bool:
    """Stability of a zero-reaction state with the loading linkage removed."""
    released = system.released()
    q_rel = released.reduce_state(u_full)
    ev = released.assemble(q_rel, lam)
    return negative_eigs(ev.tangent) == 0


def find_free_equilibria(system: ReducedSystem, path: EquilibriumPath,
                         settings: SolverSettings = None):
    """States on the path where the reaction crosses zero, each polished by
    a secant iteration on the control; the rest state is always included.

    Stability is judged on the released structure (loading removed), which
    is what "settles into a second stable state" means physically.
    """
    settings = settings or SolverSettings()
    pts = path.points
    rest = pts[0]
    out = [(rest, _released_stability(system, rest.state, rest.control))]
    scale = max(abs(p.reaction) for p in pts) or 1.0
    ref = scale * 1e-9
    for k in range(1, len(pts)):
        r0, r1 = pts[k - 1].reaction, pts[k].reaction
        if r0 * r1 >= 0.0 or max(abs(r0), abs(r1)) < ref:
            continue
        # secant on control, warm-started from the bracketing states
        t = abs(r0) / (abs(r0) + abs(r1))
        lam = pts[k - 1].control + t * (pts[k].control - pts[k - 1].control)
        q0 = pts[k - 1].q + t * (pts[k].q - pts[k - 1].q)
        lo, hi = sorted((pts[k - 1].control, pts[k].control))
        try:
            q_sol, ev = newton_correct(system, lam, q0, settings)
            for _ in range(40):
                if abs(ev.reaction) <= scale * 1e-8:
                    break
                dlam = -ev.reaction / _reaction_slope(system, q_sol, lam, ev)
                lam = min(hi, max(lo, lam + dlam))
                q_sol, ev = newton_correct(system, lam, q_sol, settings)
        except (ConvergenceError, FoldSingularityError):
            continue
        stable = _released_stability(system, ev.u_full, lam)
        point = _make_point(system, q_sol, lam, ev,
                            pts[k - 1].arc_coordinate)
        if all(abs(point.control - p.control) > 1e-6 or
               np.linalg.norm(point.state - p.state) > 1e-6
               for p, _ in out):
            out.append((point, stable))
    return out


def _reaction_slope(system, q, lam, ev):
    """d(reaction)/d(control) along the equilibrium branch."""
    lu = factorize(ev.tangent)
    dq_t = lu.solve(-ev.dresidual_dlam)
    h = 1e-6
    ev2 = system.assemble(q + h * dq_t, lam + h)
    slope = (ev2.reaction - ev.reaction) / h
    if slope == 0.0:
        return 1.0
    return slope


# ---------------------------------------------------------------------------
# persistence

def save_path_csv(path: EquilibriumPath, system: ReducedSystem, tip_node: int,
                  csv_path: str) -> None:
    rest = system.mesh.nodes
    tmp = f"{csv_path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arc_coordinate", "control_mm", "reaction_N",
                    "negative_eigs", "tip_x_mm", "tip_y_mm"])
        for p in path.points:
            tip = rest[tip_node] + p.state[3 * tip_node: 3 * tip_node + 2]
            p.tip = np.asarray(tip, dtype=float)
            w.writerow([repr(p.arc_coordinate), repr(p.control),
                        repr(p.reaction), p.negative_eigs,
                        repr(float(tip[0])), repr(float(tip[1]))])
    os.replace(tmp, csv_path)


def save_path_sidecar(path: EquilibriumPath, free_equilibria, json_path: str,
                      extra: dict = None) -> None:
    doc = {
        "complete": path.complete,
        "warning": path.warning,
        "metadata": path.metadata,
        "folds": [
            {"index": f.index, "kind": f.kind, "control_mm": f.control,
             "reaction_N": f.reaction}
            for f in path.folds
        ],
        "free_equilibria": [
            {"control_mm": p.control, "stable": bool(stable),
             "strain_energy_Nmm": e}
            for (p, stable, e) in free_equilibria
        ],
    }
    if extra:
        doc.update(extra)
    tmp = f"{json_path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, json_path)


def load_path_csv(csv_path: str) -> EquilibriumPath:
    """Rebuild a stateless path (no nodal states) from a CSV artifact."""
    path = EquilibriumPath()
    with open(csv_path) as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            path.points.append(PathPoint(
                control=float(row["control_mm"]),
                reaction=float(row["reaction_N"]),
                negative_eigs=int(row["negative_eigs"]),
                arc_coordinate=float(row["arc_coordinate"]),
                tip=np.array([float(row["tip_x_mm"]), float(row["tip_y_mm"])]),
            ))
    return path
