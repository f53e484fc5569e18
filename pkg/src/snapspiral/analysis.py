"""Observables derived from traced equilibrium paths: displacement-controlled
loading/unloading curves with snap jumps, critical forces, energy accounting
and tip-trajectory reciprocity.

Everything here is pure post-processing over immutable path data. Strain
energy along a branch is reconstructed from the work integral of the reaction
over the control, which is exact for the elastic model up to quadrature
error, so a path loaded back from CSV carries all the information needed.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .continuation import EquilibriumPath
from .errors import EmulationIncompleteError, SpecificationError

LOADING = "loading"
UNLOADING = "unloading"

MONOSTABLE = "monostable"
BISTABLE = "bistable"
MULTISTABLE = "multistable"

RECIPROCATING = "reciprocating"
NON_RECIPROCATING = "non_reciprocating"

# the elastic model's dissipation counts only snap-released energy; the
# experiment's ratio additionally contains material hysteresis
MODEL_NOTE = (
    "elastic model: dissipation_ratio counts only energy released in snap "
    "jumps; material (viscoelastic) hysteresis is not modeled"
)


@dataclass
class Jump:
    """One snap event: a vertical drop of the recorded force at constant
    control (displacement control) or a constant-force displacement jump
    (load control)."""

    control: float
    force_before: float
    force_after: float
    released_energy: float
    phase: str


@dataclass
class EmulatedCurve:
    """What a displacement-controlled testing machine would record."""

    samples: list = field(default_factory=list)  # (control, force, phase)
    jumps: list = field(default_factory=list)
    tips: list = field(default_factory=list)  # tip position per sample or None

    def phase_arrays(self, phase):
        sel = [(c, f) for c, f, p in self.samples if p == phase]
        if not sel:
            return np.empty(0), np.empty(0)
        arr = np.array(sel)
        return arr[:, 0], arr[:, 1]

    def phase_tips(self, phase):
        out = [t for (c, f, p), t in zip(self.samples, self.tips)
               if p == phase and t is not None]
        return np.array(out) if out else np.empty((0, 2))


@dataclass
class EnergyReport:
    work_in: float
    work_returned: float
    released_during_loading: float
    released_during_unloading: float
    trapped_at_second_state: float
    dissipation_ratio: float
    loading_release_fraction: float
    model_note: str = MODEL_NOTE


@dataclass
class TrajectoryPair:
    loading_path: np.ndarray
    unloading_path: np.ndarray
    enclosed_area: float
    reciprocity_class: str


# ---------------------------------------------------------------------------
# path bookkeeping

def path_energies(path: EquilibriumPath) -> np.ndarray:
    """Strain energy at every path point via the work integral ∫R dλ,
    anchored at zero in the rest state."""
    c = path.controls()
    r = path.reactions()
    inc = 0.5 * (r[1:] + r[:-1]) * np.diff(c)
    return np.concatenate([[0.0], np.cumsum(inc)])


def _tips(path: EquilibriumPath, rest_xy=None, tip_node=None):
    """Tip position per point, from full states when present, else from the
    CSV-carried tip columns; None when neither exists."""
    out = []
    for p in path.points:
        if p.state is not None and rest_xy is not None and tip_node is not None:
            out.append(rest_xy[tip_node] + p.state[3 * tip_node: 3 * tip_node + 2])
        elif p.tip is not None:
            out.append(np.asarray(p.tip, dtype=float))
        else:
            out.append(None)
    return out


# ---------------------------------------------------------------------------
# displacement-control emulation

# control slack for jump landings: near a barely-unfolded bifurcation the
# traced fold pair may not straddle the exact departing control
_LANDING_CONTROL_SLACK = 0.3  # mm
_LANDING_ENERGY_SLACK = 1e-4  # relative; quadrature noise of the work integral


def _stable_arcs(c, neg):
    """Maximal stable path runs split into monotone-in-control arcs.

    Returns inclusive index pairs (a0, a1) with a1 > a0; within each arc the
    control is monotone (plateaus allowed) and every point is stable. Arcs
    are static branch segments, so they may be traversed in either index
    direction.
    """
    arcs = []
    n = len(c)
    k = 0
    while k < n:
        if neg[k] != 0:
            k += 1
            continue
        j = k
        while j + 1 < n and neg[j + 1] == 0:
            j += 1
        m = k
        while m < j:
            direction = 0.0
            q = m
            while q < j:
                step = c[q + 1] - c[q]
                if step != 0.0:
                    if direction == 0.0:
                        direction = step
                    elif direction * step < 0.0:
                        break
                q += 1
            if q > m:
                arcs.append((m, q))
                m = q
            else:
                m += 1
        k = j + 1
    return arcs


def _arc_crossing(c, arc, lam):
    """Interpolated position (a, b, t) of control ``lam`` inside a monotone
    arc, or None when the arc does not span it."""
    a0, a1 = arc
    for m in range(a0, a1):
        lo, hi = c[m], c[m + 1]
        if (lo - lam) * (hi - lam) <= 0.0:
            t = 0.0 if hi == lo else (lam - lo) / (hi - lo)
            return (m, m + 1, t)
    return None


def walk_stable_branch(c, r, E, neg, order, rising):
    """Event stream of a displacement-controlled sweep over a traced path.

    Rides the current stable arc while the control moves in the phase
    direction (``rising`` = +1 loading, -1 unloading); arcs may be traversed
    against the path's index order, since static branches are
    direction-independent. When the arc ends (a fold or a stability loss),
    the walker jumps at (almost) constant control to the lowest-energy
    stable arc passage that can continue the sweep, provided the landing's
    strain energy does not exceed the departing energy plus the (small)
    crosshead work over the control gap.

    Yields ("point", index) and ("jump", depart_index, (a, b, t), released)
    where (a, b, t) interpolates the landing between path indices a and b.
    """
    start, terminal = order[0], order[-1]
    if neg[start] != 0:
        raise EmulationIncompleteError(
            f"sweep start state at control {c[start]:.4f} mm is unstable")
    arcs = _stable_arcs(c, neg)
    # quadrature noise of the work-integral energy accumulates over the
    # whole traced excursion, so the slack scales with the energy range
    etol = _LANDING_ENERGY_SLACK * max(1.0, float(np.max(np.abs(E))))

    cur = next((arc for arc in arcs if arc[0] <= start <= arc[1]), None)
    if cur is None:
        raise EmulationIncompleteError("sweep start is not on a stable arc")
    pos = start
    yield ("point", pos)
    jumps = 0
    while True:
        a0, a1 = cur
        # index direction that moves the control in the phase direction
        d = 1 if rising * (c[a1] - c[a0]) >= 0.0 else -1
        end = a1 if d == 1 else a0
        k = pos
        while k != end:
            k += d
            yield ("point", k)
        if end == terminal:
            return
        i = end
        lam = c[i]
        jumps += 1
        if jumps > 4 * max(len(arcs), 1):
            raise EmulationIncompleteError(
                f"sweep cycles without progress at control {lam:.4f} mm")
        best = None
        for arc in arcs:
            if arc == cur:
                continue
            b0, b1 = arc
            rise_end = b1 if rising * (c[b1] - c[b0]) >= 0.0 else b0
            seg = _arc_crossing(c, arc, lam)
            if seg is None:
                # arc entry just past the departing control is acceptable:
                # near a barely-unfolded bifurcation the fold pair need not
                # straddle the exact control
                entry = b0 if rise_end == b1 else b1
                if (rising * (c[entry] - lam) < 0.0
                        or abs(c[entry] - lam) > _LANDING_CONTROL_SLACK):
                    continue
                seg = (entry, entry, 0.0)
            a, b, t = seg
            c_land = c[a] + t * (c[b] - c[a])
            if rising * (c[rise_end] - c_land) <= 0.0 and rise_end != terminal:
                continue  # dead end: no room to continue the sweep
            e_land = E[a] + t * (E[b] - E[a])
            # the crosshead does r*dc of work over the (small) control gap
            budget = E[i] + r[i] * (c_land - lam)
            if e_land > budget + etol:
                continue
            # nearest-control landing first (the snap is vertical up to trace
            # resolution); energy breaks ties between coincident passages
            key = (abs(c_land - lam), e_land)
            if best is None or key < best[1]:
                released = max(float(budget - e_land), 0.0)
                best = (arc, key, (a, b, t), released)
        if best is None:
            raise EmulationIncompleteError(
                f"no stable landing branch at control {lam:.4f} mm")
        cur, _, (a, b, t), released = best
        yield ("jump", i, (a, b, t), released)
        # resume from the landing: the next integer index in the sweep
        # direction along the landing arc
        d = 1 if rising * (c[cur[1]] - c[cur[0]]) >= 0.0 else -1
        if a == b:
            pos = a
        else:
            pos = b if d == 1 else a
        yield ("point", pos)


def _walk_phase(c, r, E, neg, tips, order, phase, curve, rising):
    """One phase of the emulated record via the stable-branch walk."""

    def emit(control, force, tip):
        curve.samples.append((float(control), float(force), phase))
        curve.tips.append(tip)

    try:
        for event in walk_stable_branch(c, r, E, neg, order, rising):
            if event[0] == "point":
                k = event[1]
                emit(c[k], r[k], tips[k])
                continue
            _, i, (a, b, t), released = event
            f_land = r[a] + t * (r[b] - r[a])
            c_land = c[a] + t * (c[b] - c[a])
            tip = None
            if tips[a] is not None and tips[b] is not None:
                tip = tips[a] + t * (tips[b] - tips[a])
            curve.jumps.append(Jump(control=float(c[i]),
                                    force_before=float(r[i]),
                                    force_after=float(f_land),
                                    released_energy=released,
                                    phase=phase))
            emit(c_land, f_land, tip)
    except EmulationIncompleteError as exc:
        raise EmulationIncompleteError(
            f"{exc} ({phase} phase)", partial_curve=curve) from exc


def emulate_displacement_control(path: EquilibriumPath, stroke: float,
                                 rest_xy=None, tip_node=None) -> EmulatedCurve:
    """Loading/unloading force-displacement record of a full-stroke cycle.

    The loading phase follows the path's stable branch with increasing
    control; each displacement-limit fold becomes a vertical force jump at
    constant control onto the next stable branch with lower strain energy.
    The unloading phase mirrors the procedure backward. Jump released
    energies come from the strain-energy difference across the skipped
    branch segment (trapezoidal work integral).
    """
    if len(path.points) < 2:
        raise SpecificationError("path has fewer than 2 points")
    c = path.controls()
    r = path.reactions()
    if c[-1] < stroke - 1e-6:
        raise SpecificationError(
            f"path reaches control {c[-1]:.3f} mm < stroke {stroke} mm"
        )
    E = path_energies(path)
    neg = path.stability()
    tips = _tips(path, rest_xy, tip_node)
    n = len(c)

    curve = EmulatedCurve()
    fwd = list(range(n))
    _walk_phase(c, r, E, neg, tips, fwd, LOADING, curve, rising=+1.0)
    _walk_phase(c, r, E, neg, tips, fwd[::-1], UNLOADING, curve, rising=-1.0)
    return curve


def emulate_load_control(path: EquilibriumPath) -> EmulatedCurve:
    """Dual-mode emulation with the reaction force as the control.

    Jumps happen at force-limit folds and run at constant force to the next
    stable branch; the released energy of a jump is the area between the
    constant-force line and the skipped path segment.
    """
    if len(path.points) < 2:
        raise SpecificationError("path has fewer than 2 points")
    c = path.controls()
    r = path.reactions()
    E = path_energies(path)
    neg = path.stability()

    curve = EmulatedCurve()

    def walk(order, phase, rising):
        k = 0
        curve.samples.append((float(c[order[k]]), float(r[order[k]]), phase))
        curve.tips.append(None)
        n = len(order)
        while k < n - 1:
            i, j = order[k], order[k + 1]
            if rising * (r[j] - r[i]) >= 0.0:
                curve.samples.append((float(c[j]), float(r[j]), phase))
                curve.tips.append(None)
                k += 1
                continue
            force = r[i]
            land = None
            for m in range(k + 1, n - 1):
                a, b = order[m], order[m + 1]
                if (r[a] - force) * (r[b] - force) > 0.0:
                    continue
                if rising * (r[b] - r[a]) <= 0.0 or neg[b] != 0:
                    continue
                t = 0.0 if r[b] == r[a] else (force - r[a]) / (r[b] - r[a])
                lam_land = c[a] + t * (c[b] - c[a])
                e_land = E[a] + t * (E[b] - E[a])
                # quasi-static load jump: the weight's work must exceed the
                # stored-energy gain
                released = force * (lam_land - c[i]) - (e_land - E[i])
                if released < 0.0:
                    continue
                land = (m + 1, lam_land, released)
                break
            if land is None:
                raise EmulationIncompleteError(
                    f"no landing branch at force {force:.4f} N ({phase})",
                    partial_curve=curve)
            k, lam_land, released = land
            curve.jumps.append(Jump(control=float(lam_land),
                                    force_before=float(force),
                                    force_after=float(force),
                                    released_energy=float(released),
                                    phase=phase))
            curve.samples.append((float(lam_land), float(force), phase))
            curve.tips.append(None)
            curve.samples.append((float(c[order[k]]), float(r[order[k]]), phase))
            curve.tips.append(None)

    fwd = list(range(len(c)))
    walk(fwd, LOADING, +1.0)
    walk(fwd[::-1], UNLOADING, -1.0)
    return curve


# ---------------------------------------------------------------------------
# scalar observables

def critical_force(curve: EmulatedCurve) -> float:
    """First local maximum of the recorded force during loading (the jump
    onset when the structure snaps; the global maximum otherwise)."""
    lam, force = curve.phase_arrays(LOADING)
    if len(force) == 0:
        raise SpecificationError("curve has no loading phase")
    for k in range(1, len(force) - 1):
        if force[k] >= force[k - 1] and force[k] > force[k + 1]:
            return float(force[k])
    return float(force.max())


def classify_stability(free_equilibria) -> str:
    """Stability class from the zero-reaction states of a trace."""
    if not free_equilibria:
        raise SpecificationError(
            "free equilibria list is empty; the rest state must be present"
        )
    stable = sum(1 for entry in free_equilibria if bool(entry[1]))
    if stable <= 1:
        return MONOSTABLE
    return BISTABLE if stable == 2 else MULTISTABLE


def energy_report(curve: EmulatedCurve, path: EquilibriumPath,
                  free_equilibria=None) -> EnergyReport:
    """Cycle energy accounting per the displacement-controlled record."""
    lam_l, f_l = curve.phase_arrays(LOADING)
    lam_u, f_u = curve.phase_arrays(UNLOADING)
    if len(lam_l) < 2 or len(lam_u) < 2:
        raise SpecificationError("energy report needs a full emulated cycle")
    if abs(lam_u[-1] - lam_l[0]) > 1e-6:
        raise SpecificationError("cycle is open: unloading does not return "
                                 "to the starting control")
    work_in = float(np.trapezoid(f_l, lam_l))
    work_returned = float(-np.trapezoid(f_u, lam_u))
    rel_l = sum(j.released_energy for j in curve.jumps if j.phase == LOADING)
    rel_u = sum(j.released_energy for j in curve.jumps if j.phase == UNLOADING)

    trapped = 0.0
    if free_equilibria is None:
        free_equilibria = []
    stable_eq = [entry for entry in free_equilibria if bool(entry[1])]
    if len(stable_eq) >= 2:
        second = stable_eq[1]
        if len(second) > 2 and second[2] is not None:
            trapped = float(second[2])
        else:
            E = path_energies(path)
            c = path.controls()
            k = int(np.argmin(np.abs(c - second[0].control)))
            trapped = float(E[k])

    diss = 0.0 if work_in == 0.0 else (work_in - work_returned) / work_in
    total_rel = rel_l + rel_u
    frac = 0.0 if total_rel == 0.0 else rel_l / total_rel
    return EnergyReport(
        work_in=work_in,
        work_returned=work_returned,
        released_during_loading=float(rel_l),
        released_during_unloading=float(rel_u),
        trapped_at_second_state=trapped,
        dissipation_ratio=float(diss),
        loading_release_fraction=float(frac),
    )


# ---------------------------------------------------------------------------
# tip trajectories

def _resample_polyline(pts: np.ndarray, n: int) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return np.repeat(pts[:1], n, axis=0)
    t = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(t, s, pts[:, 0]),
                            np.interp(t, s, pts[:, 1])])


def _shoelace(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def trajectory_pair(loading_tips, unloading_tips, stroke: float,
                    threshold_fraction: float = 0.01,
                    samples: int = 256) -> TrajectoryPair:
    """Reciprocity of the tip motion over one loading/unloading cycle.

    Both traces are resampled to equal arc-length spacing, joined into a
    closed loop, and the absolute enclosed (shoelace) area decides the
    class against a threshold of ``threshold_fraction`` x stroke^2.
    """
    load = np.asarray(loading_tips, dtype=float)
    unload = np.asarray(unloading_tips, dtype=float)
    if len(load) < 2 or len(unload) < 2:
        raise SpecificationError("tip traces need at least 2 points each")
    a = _resample_polyline(load, samples)
    b = _resample_polyline(unload, samples)
    loop = np.vstack([a, b])
    area = _shoelace(loop)
    threshold = threshold_fraction * stroke * stroke
    cls = NON_RECIPROCATING if area > threshold else RECIPROCATING
    return TrajectoryPair(loading_path=a, unloading_path=b,
                          enclosed_area=float(area), reciprocity_class=cls)


def hausdorff_distance(a, b) -> float:
    """Symmetric Hausdorff distance between two point sets (mm)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# ---------------------------------------------------------------------------
# persistence

def save_curve_csv(curve: EmulatedCurve, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "control_mm", "force_N"])
        for c, f, p in curve.samples:
            w.writerow([p, repr(c), repr(f)])
    os.replace(tmp, path)


def save_trajectory_csv(pair: TrajectoryPair, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "x_mm", "y_mm"])
        for p in pair.loading_path:
            w.writerow([LOADING, repr(float(p[0])), repr(float(p[1]))])
        for p in pair.unloading_path:
            w.writerow([UNLOADING, repr(float(p[0])), repr(float(p[1]))])
    os.replace(tmp, path)


def report_to_dict(report: EnergyReport) -> dict:
    return {
        "work_in_Nmm": report.work_in,
        "work_returned_Nmm": report.work_returned,
        "released_during_loading_Nmm": report.released_during_loading,
        "released_during_unloading_Nmm": report.released_during_unloading,
        "trapped_at_second_state_Nmm": report.trapped_at_second_state,
        "dissipation_ratio": report.dissipation_ratio,
        "loading_release_fraction": report.loading_release_fraction,
        "model_note": report.model_note,
    }


def jumps_to_list(curve: EmulatedCurve) -> list:
    return [
        {"phase": j.phase, "control_mm": j.control,
         "force_before_N": j.force_before, "force_after_N": j.force_after,
         "released_energy_Nmm": j.released_energy}
        for j in curve.jumps
    ]
