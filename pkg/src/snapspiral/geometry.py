"""Planar centerline geometry of double-spiral unit cells, metabeams and the
mirrored snapping structure.

All lengths are millimetres, all angles radians unless a name says degrees.
Every function here is pure and deterministic: identical specs yield
bit-identical polylines.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from shapely.geometry import LineString

from .errors import GeometryInfeasibleError, SpecificationError

CLOCKWISE = "clockwise"
COUNTERCLOCKWISE = "counterclockwise"

# sweep below this is treated as the straight-segment limit of the cell
_DEGENERATE_SWEEP = 1e-6


@dataclass(frozen=True)
class SpiralParams:
    """Archimedean spiral r(theta) = a + b*theta over theta in [0, sweep]."""

    inner_radius_a: float = 0.0
    growth_rate_b: float = 1.0
    sweep_angle: float = 3.0 * math.pi
    handedness: str = COUNTERCLOCKWISE

    def __post_init__(self):
        if self.inner_radius_a < 0:
            raise SpecificationError("inner_radius_a must be >= 0")
        if self.growth_rate_b <= 0:
            raise SpecificationError("growth_rate_b must be > 0")
        if self.sweep_angle <= 0:
            raise SpecificationError("sweep_angle must be > 0")
        if self.handedness not in (CLOCKWISE, COUNTERCLOCKWISE):
            raise SpecificationError(f"unknown handedness {self.handedness!r}")


@dataclass(frozen=True)
class UnitCellSpec:
    """One double-spiral cell fitted to a width x height bounding box."""

    width: float = 8.0
    height: float = 10.0
    coil_thickness: float = 0.8
    spiral: SpiralParams = field(default_factory=SpiralParams)
    samples_per_turn: int = 64

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise SpecificationError("cell width and height must be > 0")
        if not 0 < self.coil_thickness < min(self.width, self.height) / 2:
            raise SpecificationError(
                "coil_thickness must lie in (0, min(width, height)/2)"
            )
        if self.samples_per_turn < 4:
            raise SpecificationError("samples_per_turn must be >= 4")


@dataclass(frozen=True)
class MetabeamSpec:
    """Chain of identical cells plus uniform straight connector links."""

    cell: UnitCellSpec = None
    cell_count: int = 6
    total_length: float = 56.0
    connector_policy: str = "uniform_links"

    def __post_init__(self):
        if self.cell is None:
            object.__setattr__(self, "cell", default_unit_cell())
        if self.cell_count < 1:
            raise SpecificationError("cell_count must be >= 1")
        if self.total_length <= 0:
            raise SpecificationError("total_length must be > 0")
        if self.connector_policy != "uniform_links":
            raise SpecificationError(
                f"unknown connector_policy {self.connector_policy!r}"
            )


@dataclass(frozen=True)
class SnapStructureLayout:
    """Mirrored pair of inclined metabeams joined at a rigid apex block.

    Both beam polylines run from their outer support (on the y = 0 line)
    down to the shared apex below it; pulling the apex upward through the
    support line is what snaps the structure.
    """

    left_beam: np.ndarray
    right_beam: np.ndarray
    inclination_angle: float  # degrees from horizontal
    apex: np.ndarray  # shared beam junction, also the tip marker point
    anchor_offsets: tuple
    anchor_points: np.ndarray
    depth: float = 10.0
    coil_thickness: float = 0.8

    @property
    def tip_marker(self) -> np.ndarray:
        return self.apex

    @property
    def apex_block(self) -> np.ndarray:
        """All rigid-block node positions: apex/tip first, then anchors."""
        return np.vstack([self.apex[None, :], self.anchor_points])

    @property
    def supports(self) -> np.ndarray:
        return np.array([self.left_beam[0], self.right_beam[0]])


def archimedean_point(params: SpiralParams, theta: float) -> np.ndarray:
    """Point on the spiral at angle ``theta`` (radians from the inner end)."""
    if not 0.0 <= theta <= params.sweep_angle:
        raise SpecificationError(
            f"theta={theta} outside sweep range [0, {params.sweep_angle}]"
        )
    if params.handedness == CLOCKWISE:
        theta_eff = -theta
    else:
        theta_eff = theta
    r = params.inner_radius_a + params.growth_rate_b * theta
    return np.array([r * math.cos(theta_eff), r * math.sin(theta_eff)])


def _spiral_arm(params: SpiralParams, samples_per_turn: int) -> np.ndarray:
    """Sampled arm from the inner end (theta=0) to the outer port."""
    n = max(2, int(math.ceil(samples_per_turn * params.sweep_angle / (2 * math.pi))) + 1)
    theta = np.linspace(0.0, params.sweep_angle, n)
    sign = -1.0 if params.handedness == CLOCKWISE else 1.0
    r = params.inner_radius_a + params.growth_rate_b * theta
    return np.column_stack([r * np.cos(sign * theta), r * np.sin(sign * theta)])


def min_coil_gap(polyline: np.ndarray, samples_per_turn: int) -> float:
    """Smallest centerline distance between non-neighbouring passes.

    Pairs closer than a quarter turn along the curve are skipped so the
    curve's own continuity does not register as a gap violation.
    """
    pts = np.asarray(polyline, dtype=float)
    n = len(pts)
    window = max(2, samples_per_turn // 4)
    if n <= window + 1:
        return math.inf
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    idx = np.arange(n)
    near = np.abs(idx[:, None] - idx[None, :]) <= window
    d2[near] = np.inf
    return float(math.sqrt(d2.min()))


def build_unit_cell(spec: UnitCellSpec) -> np.ndarray:
    """S-shaped cell centerline from the entry port to the exit port.

    Two point-symmetric Archimedean arcs joined at the cell center are
    anisotropically scaled so the curve's bounding box is exactly
    width x height, with the ports on the chain axis at x = -/+ width/2.
    """
    if spec.spiral.sweep_angle < _DEGENERATE_SWEEP:
        # zero-turn limit: straight chain-axis segment through the cell
        return np.array([[-spec.width / 2, 0.0], [spec.width / 2, 0.0]])

    arm = _spiral_arm(spec.spiral, spec.samples_per_turn)
    other = -arm[::-1]  # point reflection through the cell center
    if spec.spiral.inner_radius_a == 0.0:
        curve = np.vstack([other, arm[1:]])
    else:
        curve = np.vstack([other, arm])  # straight joint across the center

    # rotate the outer port direction onto +x so the ports span the chain axis
    port = arm[-1]
    ang = math.atan2(port[1], port[0])
    c, s = math.cos(-ang), math.sin(-ang)
    rot = np.array([[c, -s], [s, c]])
    curve = curve @ rot.T

    xmin, ymin = curve.min(axis=0)
    xmax, ymax = curve.max(axis=0)
    if (xmax - xmin) <= 0 or (ymax - ymin) <= 0:
        raise GeometryInfeasibleError(
            "degenerate spiral: cell curve has no planar extent"
        )
    scale = np.array([spec.width / (xmax - xmin), spec.height / (ymax - ymin)])
    curve = curve * scale

    gap = min_coil_gap(curve, spec.samples_per_turn)
    if gap < spec.coil_thickness:
        raise GeometryInfeasibleError(
            f"coil centerline gap {gap:.4f} mm is below the coil thickness "
            f"{spec.coil_thickness} mm; the solid cell would self-intersect"
        )
    return curve


def _gap_for_growth(b: float, sweep: float, inner: float, width: float,
                    height: float, samples_per_turn: int) -> float:
    spiral = SpiralParams(inner_radius_a=inner, growth_rate_b=b, sweep_angle=sweep)
    arm = _spiral_arm(spiral, samples_per_turn)
    curve = np.vstack([-arm[::-1], arm[1:] if inner == 0 else arm])
    port = arm[-1]
    ang = math.atan2(port[1], port[0])
    c, s = math.cos(-ang), math.sin(-ang)
    curve = curve @ np.array([[c, -s], [s, c]]).T
    span = curve.max(axis=0) - curve.min(axis=0)
    curve = curve * np.array([width / span[0], height / span[1]])
    return min_coil_gap(curve, samples_per_turn)


@lru_cache(maxsize=32)
def solve_growth_rate(width: float = 8.0, height: float = 10.0,
                      coil_thickness: float = 0.8, clearance: float = 0.2,
                      sweep_angle: float = 3.0 * math.pi,
                      inner_radius: float = 0.3,
                      samples_per_turn: int = 64) -> float:
    """Growth rate giving a coil centerline gap of coil_thickness + clearance.

    The gap is measured on the scaled cell, so the anisotropic fit to the
    bounding box is accounted for. A nonzero inner radius is required for
    the solve to have a handle: with a = 0 the scaled gap is independent of
    b (pure similarity), in which case the achieved gap is simply checked.
    """
    target = coil_thickness + clearance

    def f(b):
        return _gap_for_growth(b, sweep_angle, inner_radius, width, height,
                               samples_per_turn) - target

    # the gap rises with b from 0, peaks, then settles toward the a-to-b
    # similarity limit; solve on the rising branch up to the coarse-scan peak
    grid = np.geomspace(1e-3, 10.0, 40)
    vals = np.array([f(b) for b in grid])
    k = int(np.argmax(vals))
    if vals[k] < 0:
        achieved = vals[k] + target
        if achieved >= coil_thickness:
            return float(grid[k])
        raise GeometryInfeasibleError(
            f"sweep {sweep_angle:.3f} rad packs coils too densely: achievable "
            f"gap {achieved:.4f} mm < coil thickness {coil_thickness} mm"
        )
    lo = grid[0] if vals[0] < 0 else grid[0] * 0.5
    return brentq(f, lo, grid[k], xtol=1e-9)


@lru_cache(maxsize=8)
def default_unit_cell() -> UnitCellSpec:
    """Paper-default 8 x 10 mm cell, 1.5 turns per half-spiral."""
    b = solve_growth_rate()
    return UnitCellSpec(spiral=SpiralParams(inner_radius_a=0.3, growth_rate_b=b))


def cell_pitch(spec: MetabeamSpec) -> float:
    """Chain-axis length consumed by one cell."""
    return spec.cell.width


def chain_cells(spec: MetabeamSpec) -> np.ndarray:
    """Concatenate cells end-to-end into one metabeam centerline.

    The leftover length (total_length - cells) is split into equal straight
    connector links between cells and at both ends. Returned polyline runs
    from (0, 0) to (total_length, 0).
    """
    pitch = cell_pitch(spec)
    slack = spec.total_length - spec.cell_count * pitch
    if slack < -1e-12:
        raise GeometryInfeasibleError(
            f"total_length {spec.total_length} mm is shorter than "
            f"{spec.cell_count} cells x {pitch} mm pitch"
        )
    gap = max(0.0, slack) / (spec.cell_count + 1)
    cell = build_unit_cell(spec.cell)

    pts = [np.array([[0.0, 0.0]])]
    cursor = gap
    for k in range(spec.cell_count):
        shifted = cell + np.array([cursor + pitch / 2, 0.0])
        pts.append(shifted)
        cursor += pitch + gap
    pts.append(np.array([[spec.total_length, 0.0]]))

    out = [pts[0]]
    for seg in pts[1:]:
        prev = out[-1]
        if np.allclose(prev[-1], seg[0], atol=1e-12):
            seg = seg[1:]
        out.append(seg)
    return np.vstack(out)


def cell_spans(spec: MetabeamSpec) -> list:
    """Chain-axis [start, end] interval of each cell, for symmetry checks."""
    pitch = cell_pitch(spec)
    gap = max(0.0, spec.total_length - spec.cell_count * pitch) / (spec.cell_count + 1)
    spans = []
    cursor = gap
    for _ in range(spec.cell_count):
        spans.append((cursor, cursor + pitch))
        cursor += pitch + gap
    return spans


def polyline_length(polyline: np.ndarray) -> float:
    pts = np.asarray(polyline, dtype=float)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def assemble_structure(beam: np.ndarray, angle: float = 35.0,
                       anchor_offsets=(-4.0, 4.0), depth: float = 10.0,
                       coil_thickness: float = 0.8) -> SnapStructureLayout:
    """Incline, mirror and join two metabeams into the snapping structure.

    The beam is tilted ``angle`` degrees below the horizontal support line
    and mirrored about the vertical centerline; both inner ends meet at the
    apex, which carries the tip marker and the loading anchor points at the
    signed ``anchor_offsets`` along the horizontal apex crossline.
    """
    beam = np.asarray(beam, dtype=float)
    if len(beam) < 2:
        raise SpecificationError("beam polyline needs at least 2 points")
    if not 0 < angle < 90:
        raise SpecificationError("inclination angle must lie in (0, 90) degrees")

    span = beam[-1] - beam[0]
    length = float(np.linalg.norm(span))
    # express the beam in its chord frame first
    ang0 = math.atan2(span[1], span[0])
    a = math.radians(angle)
    c, s = math.cos(-ang0 - a), math.sin(-ang0 - a)
    local = (beam - beam[0]) @ np.array([[c, -s], [s, c]]).T

    apex = np.array([0.0, -length * math.sin(a)])
    support_left = np.array([-length * math.cos(a), 0.0])
    left = local + support_left
    right = left * np.array([-1.0, 1.0])

    # crossing beams (other than the shared apex) are physically infeasible
    if len(beam) > 2:
        gap = LineString(left[:-1]).distance(LineString(right[:-1]))
        if gap <= 0.0:
            raise GeometryInfeasibleError(
                f"mirrored beams intersect at inclination {angle} deg"
            )

    offsets = tuple(float(o) for o in anchor_offsets)
    anchors = np.array([[o, apex[1]] for o in offsets])
    return SnapStructureLayout(
        left_beam=left,
        right_beam=right,
        inclination_angle=float(angle),
        apex=apex,
        anchor_offsets=offsets,
        anchor_points=anchors,
        depth=float(depth),
        coil_thickness=float(coil_thickness),
    )


def build_structure(beam_spec: MetabeamSpec = None, angle: float = 35.0,
                    anchor_offsets=(-4.0, 4.0), depth: float = 10.0) -> SnapStructureLayout:
    """Paper-default structure from a metabeam spec in one call."""
    if beam_spec is None:
        beam_spec = MetabeamSpec()
    beam = chain_cells(beam_spec)
    return assemble_structure(beam, angle=angle, anchor_offsets=anchor_offsets,
                              depth=depth,
                              coil_thickness=beam_spec.cell.coil_thickness)


# ---------------------------------------------------------------------------
# persistence

def layout_to_dict(layout: SnapStructureLayout) -> dict:
    return {
        "left_beam": layout.left_beam.tolist(),
        "right_beam": layout.right_beam.tolist(),
        "inclination_angle": layout.inclination_angle,
        "apex": layout.apex.tolist(),
        "anchor_offsets": list(layout.anchor_offsets),
        "anchor_points": layout.anchor_points.tolist(),
        "depth": layout.depth,
        "coil_thickness": layout.coil_thickness,
    }


def layout_from_dict(doc: dict) -> SnapStructureLayout:
    return SnapStructureLayout(
        left_beam=np.array(doc["left_beam"], dtype=float),
        right_beam=np.array(doc["right_beam"], dtype=float),
        inclination_angle=float(doc["inclination_angle"]),
        apex=np.array(doc["apex"], dtype=float),
        anchor_offsets=tuple(doc["anchor_offsets"]),
        anchor_points=np.array(doc["anchor_points"], dtype=float),
        depth=float(doc["depth"]),
        coil_thickness=float(doc["coil_thickness"]),
    )


def save_layout_json(layout: SnapStructureLayout, path: str,
                     extra: dict = None) -> None:
    doc = layout_to_dict(layout)
    if extra:
        doc.update(extra)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_layout_json(path: str) -> SnapStructureLayout:
    with open(path) as fh:
        return layout_from_dict(json.load(fh))


def export_layout_svg(layout: SnapStructureLayout, path: str,
                      margin: float = 2.0) -> None:
    """Write the structure as an SVG drawing, 1 user unit = 1 mm.

    Beams are stroked at coil thickness; anchors and the tip marker are
    drawn as circles. Output is byte-deterministic for identical layouts.
    """
    for name, poly in (("left_beam", layout.left_beam),
                       ("right_beam", layout.right_beam)):
        if len(poly) < 2:
            raise SpecificationError(f"{name} polyline is empty or degenerate")

    pts = np.vstack([layout.left_beam, layout.right_beam, layout.apex_block])
    xmin, ymin = pts.min(axis=0) - margin
    xmax, ymax = pts.max(axis=0) + margin

    def path_d(poly):
        coords = " L ".join(f"{p[0]:.6f},{p[1]:.6f}" for p in poly)
        return f"M {coords}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{xmin:.3f} {ymin:.3f} {xmax - xmin:.3f} {ymax - ymin:.3f}" '
        f'width="{xmax - xmin:.3f}mm" height="{ymax - ymin:.3f}mm">',
        # flip y so +y points up on screen
        f'<g transform="translate(0,{(ymin + ymax):.3f}) scale(1,-1)">',
    ]
    for poly in (layout.left_beam, layout.right_beam):
        lines.append(
            f'<path d="{path_d(poly)}" fill="none" stroke="black" '
            f'stroke-width="{layout.coil_thickness:.3f}" '
            'stroke-linejoin="round" stroke-linecap="round"/>'
        )
    lines.append(
        f'<circle cx="{layout.apex[0]:.6f}" cy="{layout.apex[1]:.6f}" '
        'r="0.6" fill="red"/>'
    )
    for p in layout.anchor_points:
        lines.append(
            f'<circle cx="{p[0]:.6f}" cy="{p[1]:.6f}" r="0.5" fill="none" '
            'stroke="blue" stroke-width="0.2"/>'
        )
    lines.append("</g>")
    lines.append("</svg>")

    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
