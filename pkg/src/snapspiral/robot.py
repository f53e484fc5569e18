"""Resistive-drag swimmer: maps the snapping fin's deformation cycles onto
1-D body propulsion.

The fin is the traced snapping structure itself (its beam segments are the
blade elements); the tendon pull program is run through the emulated
displacement-controlled response, so snap events appear as fast shape
transitions. Hydrodynamics are quasi-steady blade-element drag: every
segment feels a normal force quadratic in its fluid-relative normal
velocity, the mirrored twin fin cancels lateral components, and the body
sees quadratic form drag. Units stay mm / N / s / tonne, so forces come out
in Newtons directly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import LOADING, UNLOADING
from .continuation import EquilibriumPath
from .errors import EmulationIncompleteError, IntegrationError, SpecificationError

MODE_FIX = "fix"
MODE_PIN = "pin"

WATER_DENSITY = 1.0e-9  # tonne/mm^3


@dataclass(frozen=True)
class RobotSpec:
    body_length: float = 200.0  # mm
    body_drag_coeff: float = 0.8
    body_frontal_area: float = math.pi / 4 * 30.0**2  # mm^2, 30 mm eq. diameter
    fin_depth: float = 10.0  # mm, out-of-plane blade depth
    fin_thickness: float = 0.8  # mm
    fluid_density: float = WATER_DENSITY
    normal_drag_coeff: float = 1.1
    body_mass_factor: float = 3.0  # effective inertia / displaced water mass
    cycle_time: float = 0.4  # s
    pull_displacement: float = 46.0  # mm
    pull_fraction: float = 0.55
    mode: str = MODE_FIX
    cycles: int = 5
    steps_per_cycle: int = 2000
    snap_duration: float = 0.01  # s over which a snap's shape change happens

    def __post_init__(self):
        positive = (self.body_length, self.body_drag_coeff,
                    self.body_frontal_area, self.fin_depth, self.fin_thickness,
                    self.fluid_density, self.normal_drag_coeff,
                    self.body_mass_factor,
                    self.cycle_time, self.pull_displacement, self.cycles,
                    self.steps_per_cycle, self.snap_duration)
        if any(v <= 0 for v in positive):
            raise SpecificationError("all robot spec values must be positive")
        if not 0.0 < self.pull_fraction < 1.0:
            raise SpecificationError("pull_fraction must lie in (0, 1)")
        if self.mode not in (MODE_FIX, MODE_PIN):
            raise SpecificationError(f"unknown robot mode {self.mode!r}")
        if self.steps_per_cycle < 2000:
            raise SpecificationError("steps_per_cycle must be >= 2000")

    @property
    def body_mass(self) -> float:
        """Effective translational inertia of the body (tonne).

        The displaced water column sets the neutral-buoyancy scale;
        ``body_mass_factor`` folds in the hull structure, payload and the
        hydrodynamic added mass that a surging hull drags along.
        """
        return (self.body_mass_factor * self.fluid_density
                * self.body_frontal_area * self.body_length)


@dataclass
class CycleResult:
    time: np.ndarray  # s
    body_position: np.ndarray  # mm
    body_velocity: np.ndarray  # mm/s
    thrust: np.ndarray  # N
    per_cycle_displacement: list
    mean_cycle_displacement: float
    backward_segment_present: list
    per_cycle_backward: list = field(default_factory=list)
    per_cycle_forward: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# fin kinematics from the traced path

def _phase_knots(path: EquilibriumPath, stroke: float, phase: str):
    """Shape knots (control, full state) of one displacement-control phase.

    Walks the path's stable branch like the analysis emulation does, keeping
    the full nodal states; a snap appears as two consecutive knots at the
    same control. Knot controls are monotone in the phase direction.
    """
    from .analysis import path_energies, walk_stable_branch

    c = path.controls()
    r = path.reactions()
    if c[-1] < stroke - 1e-6:
        raise SpecificationError(
            f"path reaches {c[-1]:.2f} mm < pull displacement {stroke} mm"
        )
    states = [p.state for p in path.points]
    if any(s is None for s in states):
        raise SpecificationError("path lacks nodal states; re-trace in session")
    E = path_energies(path)
    neg = path.stability()
    order = list(range(len(c)))
    rising = +1.0
    if phase == UNLOADING:
        order = order[::-1]
        rising = -1.0

    knots = []  # (control, state)
    for event in walk_stable_branch(c, r, E, neg, order, rising):
        if event[0] == "point":
            k = event[1]
            knots.append((c[k], states[k]))
            continue
        _, i, (a, b, t), _released = event
        u_land = states[a] + t * (states[b] - states[a])
        c_land = c[a] + t * (c[b] - c[a])
        knots.append((c_land, u_land))  # snap target, (almost) same control
    controls = np.array([kc for kc, _ in knots])
    shapes = np.array([ks for _, ks in knots])
    return controls, shapes


def _shape_at(controls, shapes, lam, rising):
    """Interpolated nodal state at commanded control ``lam``.

    For a snap (two knots at the same control) this returns the pre-snap
    shape at the snap control; the post-snap shape takes over just beyond
    it, so the transition spans the caller's time discretization.
    """
    if rising > 0:
        k = int(np.searchsorted(controls, lam, side="left"))
    else:
        k = int(np.searchsorted(-controls, -lam, side="left"))
    k = min(max(k, 1), len(controls) - 1)
    c0, c1 = controls[k - 1], controls[k]
    if c1 == c0:
        return shapes[k - 1]
    t = (lam - c0) / (c1 - c0)
    t = min(max(t, 0.0), 1.0)
    return shapes[k - 1] + t * (shapes[k] - shapes[k - 1])


def fin_shape_sequence(path: EquilibriumPath, spec: RobotSpec):
    """Time-indexed fin shapes over one actuation cycle.

    The tendon program pulls 0 → pull_displacement over pull_fraction of the
    cycle and releases linearly back; snap discontinuities are spread over
    ``snap_duration`` so shape velocities (and hence drag forces) stay
    finite and resolution-independent. Returns (times (s,), node positions
    (steps+1, n_nodes, 2)).
    """
    n = spec.steps_per_cycle
    T = spec.cycle_time
    t_pull = spec.pull_fraction * T
    times = np.linspace(0.0, T, n + 1)

    load_c, load_s = _phase_knots(path, spec.pull_displacement, LOADING)
    unload_c, unload_s = _phase_knots(path, spec.pull_displacement, UNLOADING)

    # commanded control per time sample
    lam = np.where(
        times <= t_pull,
        spec.pull_displacement * times / t_pull,
        spec.pull_displacement * (1.0 - (times - t_pull) / (T - t_pull)),
    )

    states = np.empty((n + 1, load_s.shape[1]))
    for k, t in enumerate(times):
        if t <= t_pull:
            states[k] = _shape_at(load_c, load_s, lam[k], +1.0)
        else:
            states[k] = _shape_at(unload_c, unload_s, lam[k], -1.0)

    # spread each snap over snap_duration: wherever the shape changes much
    # faster than the surrounding sweep, blend linearly over the window
    dt = T / n
    win = max(1, int(round(spec.snap_duration / dt)))
    jumps = np.linalg.norm(np.diff(states, axis=0), axis=1)
    scale = np.median(jumps[jumps > 0]) if np.any(jumps > 0) else 0.0
    snap_at = np.flatnonzero(jumps > max(20.0 * scale, 1.0))
    orig = states.copy()
    for k in snap_at:
        k_end = min(k + win, n)
        a = orig[k]
        b = orig[k_end]
        for m in range(1, k_end - k):
            states[k + m] = a + (b - a) * (m / (k_end - k))

    return times, states


# ---------------------------------------------------------------------------
# hydrodynamics

def segment_thrust(x_prev, x_now, dt, body_velocity, spec: RobotSpec) -> float:
    """Swim-axis (y) fluid force on the robot from one fin's segments.

    ``x_prev``/``x_now`` are (n_nodes, 2) positions in the body frame. Each
    segment's midpoint velocity relative to the fluid is its shape velocity
    plus the body's swim velocity; the resistive normal force is
    0.5 rho C_n A |v_n| v_n against the motion, and its reaction pushes the
    body. Lateral (x) components cancel against the mirrored twin fin, so
    only y survives; the returned value already counts both fins.
    """
    mid_prev = 0.5 * (x_prev[:-1] + x_prev[1:])
    mid_now = 0.5 * (x_now[:-1] + x_now[1:])
    v = (mid_now - mid_prev) / dt
    v[:, 1] += body_velocity

    seg = x_now[1:] - x_now[:-1]
    L = np.linalg.norm(seg, axis=1)
    ok = L > 1e-12
    normal = np.zeros_like(seg)
    normal[ok] = np.column_stack([-seg[ok, 1], seg[ok, 0]]) / L[ok, None]

    vn = np.sum(v * normal, axis=1)
    area = L * spec.fin_depth
    f = -0.5 * spec.fluid_density * spec.normal_drag_coeff * area * np.abs(vn) * vn
    fy = float(np.sum(f * normal[:, 1]))
    return 2.0 * fy  # mirrored fin pair


def _integrate(spec: RobotSpec, xy, wall_sign: float):
    """Explicit midpoint step on the body velocity. ``wall_sign`` is the swim
    direction the cycle-1 launch wall blocks motion against (0 = no wall)."""
    n = spec.steps_per_cycle
    dt = spec.cycle_time / n
    total = spec.cycles * n
    t = np.empty(total + 1)
    pos = np.empty(total + 1)
    vel = np.empty(total + 1)
    thr = np.empty(total + 1)
    t[0], pos[0], vel[0], thr[0] = 0.0, 0.0, 0.0, 0.0

    m = spec.body_mass
    rho = spec.fluid_density
    cda = 0.5 * rho * spec.body_drag_coeff * spec.body_frontal_area

    for step in range(total):
        k = step % n  # position within the cycle
        thrust1 = segment_thrust(xy[k], xy[k + 1], dt, vel[step], spec)
        drag1 = -cda * abs(vel[step]) * vel[step]
        v_half = vel[step] + 0.5 * dt * (thrust1 + drag1) / m
        thrust = segment_thrust(xy[k], xy[k + 1], dt, v_half, spec)
        drag = -cda * abs(v_half) * v_half
        a = (thrust + drag) / m
        v_new = vel[step] + a * dt
        if not np.isfinite(v_new) or abs(v_new) > 1e7:
            raise IntegrationError(
                f"body velocity diverged at t = {t[step]:.4f} s; "
                "reduce the time step or snap speed")
        p_new = pos[step] + 0.5 * (vel[step] + v_new) * dt
        if step < n and wall_sign * p_new < 0.0:
            # wall contact during cycle 1: cannot slide backward past start
            p_new = 0.0
            v_new = wall_sign * max(wall_sign * v_new, 0.0)
        t[step + 1] = t[step] + dt
        pos[step + 1] = p_new
        vel[step + 1] = v_new
        thr[step + 1] = thrust
    return t, pos, vel, thr


def simulate_swim(spec: RobotSpec, path: EquilibriumPath,
                  rest_xy) -> CycleResult:
    """Integrate the 1-D body dynamics over the actuation cycles.

    ``rest_xy`` is the (n_nodes, 2) rest node positions of the traced mesh;
    fin shapes are rest plus the path's nodal displacements. Explicit
    midpoint steps on the body velocity; the wall-contact constraint of the first
    cycle keeps the body from sliding backward past its starting position
    (the launch wall of the experiment). The returned positions are
    oriented so the mode's own forward direction is positive.
    """
    _, states = fin_shape_sequence(path, spec)
    n = spec.steps_per_cycle
    dt = spec.cycle_time / n
    rest_xy = np.asarray(rest_xy, dtype=float)
    n_nodes = rest_xy.shape[0]
    xy = rest_xy[None, :, :] + states.reshape(n + 1, n_nodes, 3)[:, :, :2]

    # the swim direction along the body axis is a property of the fin
    # kinematics; find it with an unconstrained pass, then integrate with
    # the launch wall behind the robot and report forward as positive
    _, pos0, _, _ = _integrate(spec, xy, wall_sign=0.0)
    sign = 1.0 if pos0[-1] >= pos0[0] else -1.0
    t, pos, vel, thr = _integrate(spec, xy, wall_sign=sign)
    pos *= sign
    vel *= sign
    thr *= sign

    per_cycle, backward_flags, back_amounts, fwd_amounts = [], [], [], []
    for cyc in range(spec.cycles):
        s0, s1 = cyc * n, (cyc + 1) * n
        per_cycle.append(float(pos[s1] - pos[s0]))
        dp = np.diff(pos[s0:s1 + 1])
        back = float(-np.sum(dp[dp < 0.0]))
        fwd = float(np.sum(dp[dp > 0.0]))
        back_amounts.append(back)
        fwd_amounts.append(fwd)
        # a cycle "contains a backward segment" when its backward travel is
        # a non-trivial fraction of its forward travel
        backward_flags.append(back > 0.05 * max(fwd, 1e-9))

    return CycleResult(
        time=t,
        body_position=pos,
        body_velocity=vel,
        thrust=thr,
        per_cycle_displacement=per_cycle,
        mean_cycle_displacement=float(np.mean(per_cycle)),
        backward_segment_present=backward_flags,
        per_cycle_backward=back_amounts,
        per_cycle_forward=fwd_amounts,
    )


# ---------------------------------------------------------------------------
# persistence

def save_cycle_csv(result: CycleResult, path: str, stride: int = 1) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "position_mm", "velocity_mm_s", "thrust_N"])
        for k in range(0, len(result.time), stride):
            w.writerow([repr(float(result.time[k])),
                        repr(float(result.body_position[k])),
                        repr(float(result.body_velocity[k])),
                        repr(float(result.thrust[k]))])
    os.replace(tmp, path)


def summary_to_dict(result: CycleResult) -> dict:
    return {
        "per_cycle_displacement_mm": result.per_cycle_displacement,
        "mean_cycle_displacement_mm": result.mean_cycle_displacement,
        "backward_segment_present": result.backward_segment_present,
        "per_cycle_backward_mm": result.per_cycle_backward,
        "per_cycle_forward_mm": result.per_cycle_forward,
    }


def save_summary_json(doc: dict, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)
