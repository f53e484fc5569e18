"""Declarative test configurations: boundary conditions, loading linkage and
stroke program for the snapping structure.

A Scenario bundles a structure layout with a BoundaryPair and a LoadingSpec;
``build_system`` meshes the layout, applies the constraints and returns the
ReducedSystem that the continuation module traces. The named built-in
configurations cover both symmetric center-loaded cases and the off-center
(+/-4 mm) suite including the two fixed-pinned variants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SpecificationError
from .geometry import (
    MetabeamSpec,
    SnapStructureLayout,
    UnitCellSpec,
    SpiralParams,
    build_structure,
    default_unit_cell,
)
from .model import BeamMesh, Material, RigidLink, Section
from .system import LoadingAttachment, ReducedSystem

FIXED = "fixed"
PINNED = "pinned"

RIGID_LINK = "rigid_link"
VERTICAL_ONLY = "vertical_only"

CENTER = "center"

DEFAULT_ELEMENT_LENGTH = 0.5  # mm along the beam centerline
DEFAULT_IMPERFECTION = 1e-3  # mm lateral apex shift, symmetric scenarios only


@dataclass(frozen=True)
class BoundaryPair:
    """Support condition at each outer beam end."""

    left: str = FIXED
    right: str = FIXED

    def __post_init__(self):
        for side in (self.left, self.right):
            if side not in (FIXED, PINNED):
                raise SpecificationError(f"unknown boundary condition {side!r}")


@dataclass(frozen=True)
class LoadingSpec:
    """How and how far the crosshead pulls the structure.

    ``attachment`` is either the string "center" (grab the apex itself) or a
    signed millimetre offset selecting one of the layout's anchor points.
    """

    attachment: object = CENTER
    bar_length: float = 80.0
    bar_mode: str = RIGID_LINK
    stroke: float = 55.0
    direction: str = "full_cycle"

    def __post_init__(self):
        if self.bar_mode not in (RIGID_LINK, VERTICAL_ONLY):
            raise SpecificationError(f"unknown bar_mode {self.bar_mode!r}")
        if self.bar_mode == RIGID_LINK and self.bar_length <= 0:
            raise SpecificationError("bar_length must be > 0 in rigid_link mode")
        if self.stroke <= 0:
            raise SpecificationError("stroke must be > 0")
        if self.direction not in ("loading", "unloading", "full_cycle"):
            raise SpecificationError(f"unknown direction {self.direction!r}")
        if self.attachment != CENTER and not isinstance(
            self.attachment, (int, float)
        ):
            raise SpecificationError(
                "attachment must be 'center' or a signed offset in mm"
            )


@dataclass(frozen=True)
class Scenario:
    """One named test configuration over a given structure layout."""

    layout: SnapStructureLayout
    boundary: BoundaryPair
    loading: LoadingSpec
    label: str
    imperfection: float = 0.0  # lateral apex shift, mm
    element_length: float = DEFAULT_ELEMENT_LENGTH
    material: Material = field(default_factory=Material)

    def __post_init__(self):
        if not self.label:
            raise SpecificationError("scenario label must be non-empty")
        if self.element_length <= 0:
            raise SpecificationError("element_length must be > 0")
        if self.loading.attachment != CENTER:
            half_width = float(
                np.max(np.abs(np.asarray(self.layout.anchor_offsets)))
            )
            if abs(float(self.loading.attachment)) > half_width + 1e-9:
                raise SpecificationError(
                    f"attachment offset {self.loading.attachment} mm lies "
                    f"outside the apex half-width {half_width} mm"
                )


# ---------------------------------------------------------------------------
# meshing

def _resample(polyline: np.ndarray, h: float) -> np.ndarray:
    """Subdivide every segment to at most length ``h``, keeping all original
    vertices (so cell/connector joints stay exact nodes)."""
    pts = np.asarray(polyline, dtype=float)
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(np.linalg.norm(b - a) / h)))
        for k in range(1, n + 1):
            out.append(a + (b - a) * (k / n))
    return np.array(out)


def mesh_from_layout(layout: SnapStructureLayout,
                     element_length: float = DEFAULT_ELEMENT_LENGTH,
                     material: Material = None,
                     imperfection: float = 0.0) -> BeamMesh:
    """Beam mesh of the full structure with tagged support/apex/anchor nodes.

    Both beam chains share a single apex node; the anchor points ride on it
    as rigid-link slaves (the apex block is effectively rigid). A nonzero
    ``imperfection`` shifts the apex node laterally to break the symmetric
    structure's bifurcation into a plain limit point.
    """
    material = material or Material()
    section = Section(layout.coil_thickness, layout.depth)

    left = _resample(layout.left_beam, element_length)
    right = _resample(layout.right_beam, element_length)
    if not (np.allclose(left[-1], layout.apex, atol=1e-9)
            and np.allclose(right[-1], layout.apex, atol=1e-9)):
        raise SpecificationError("beam polylines must terminate at the apex")

    apex = layout.apex + np.array([imperfection, 0.0])
    nodes = [*left[:-1], apex, *right[:-1][::-1]]
    apex_idx = len(left) - 1
    n_left = len(left)

    elements = []
    for k in range(n_left - 1):
        elements.append((k, k + 1, material, section, "beam"))
    # right chain runs support -> apex; its nodes are stored apex-outward
    right_ids = [apex_idx] + list(range(n_left, n_left + len(right) - 1))
    for k in range(len(right_ids) - 1):
        elements.append((right_ids[k + 1], right_ids[k], material, section,
                         "beam"))

    tags = {
        "support_left": 0,
        "support_right": n_left + len(right) - 2,
        "apex": apex_idx,
        "tip": apex_idx,
    }

    links = []
    node_list = [np.asarray(p, dtype=float) for p in nodes]
    for i, off in enumerate(layout.anchor_offsets):
        slave = len(node_list)
        node_list.append(layout.anchor_points[i] + np.array([imperfection, 0.0]))
        links.append(RigidLink(master=apex_idx, slave=slave,
                               offset=node_list[slave] - apex))
        tags[f"anchor_{off:+g}"] = slave

    return BeamMesh(node_list, elements, rigid_links=links, tags=tags)


# ---------------------------------------------------------------------------
# constraints and loading

def apply_boundary(mesh: BeamMesh, pair: BoundaryPair):
    """Fixed-DOF list for the support conditions: fixed ends clamp all three
    DOFs, pinned ends leave the rotation free."""
    fixed = []
    for tag, kind in (("support_left", pair.left), ("support_right", pair.right)):
        if tag not in mesh.tags:
            raise SpecificationError(f"mesh is missing the {tag!r} node tag")
        node = mesh.tags[tag]
        fixed += [mesh.dof(node, 0), mesh.dof(node, 1)]
        if kind == FIXED:
            fixed.append(mesh.dof(node, 2))
    return sorted(fixed)


def attach_loading(mesh: BeamMesh, loading: LoadingSpec) -> LoadingAttachment:
    """Loading linkage grabbing the apex block at the requested attachment.

    The grab is realized on the apex master node with the anchor's rigid
    offset, so an offset attachment couples the control to the anchor point
    exactly as the pin joint in the rig does.
    """
    if "apex" not in mesh.tags:
        raise SpecificationError("mesh is missing the 'apex' node tag")
    master = mesh.tags["apex"]
    if loading.attachment == CENTER:
        offset = np.zeros(2)
    else:
        want = float(loading.attachment)
        match = [l for l in mesh.rigid_links
                 if l.master == master and abs(l.offset[0] - want) < 1e-6
                 and abs(l.offset[1]) < 1e-6]
        if not match:
            raise SpecificationError(
                f"no anchor at offset {want:+g} mm on the apex block"
            )
        offset = match[0].offset
    mode = "bar" if loading.bar_mode == RIGID_LINK else "vertical"
    return LoadingAttachment(mode=mode, master=master, offset=offset,
                             bar_length=loading.bar_length)


def build_system(scenario: Scenario) -> ReducedSystem:
    """Mesh, constrain and link one scenario into a traceable system."""
    mesh = mesh_from_layout(scenario.layout,
                            element_length=scenario.element_length,
                            material=scenario.material,
                            imperfection=scenario.imperfection)
    fixed = apply_boundary(mesh, scenario.boundary)
    loading = attach_loading(mesh, scenario.loading)
    return ReducedSystem(mesh, fixed_dofs=fixed, loading=loading)


# ---------------------------------------------------------------------------
# built-in configurations

def builtin_scenarios(stroke: float = 55.0,
                      imperfection: float = DEFAULT_IMPERFECTION):
    """The named test suite on the default structure.

    Two symmetric center-loaded cases (with the documented symmetry-breaking
    imperfection) plus the six off-center configurations. The fixed-pinned
    pair keeps the pinned support on the left: "(pin)" pulls the anchor on
    the pinned side, "(fix)" the one on the fixed side.
    """
    layout = build_structure()
    out = []

    def add(label, left, right, attachment, imp=0.0):
        out.append(Scenario(
            layout=layout,
            boundary=BoundaryPair(left, right),
            loading=LoadingSpec(attachment=attachment, stroke=stroke),
            label=label,
            imperfection=imp,
        ))

    add("fixed-fixed", FIXED, FIXED, CENTER, imp=imperfection)
    add("pinned-pinned", PINNED, PINNED, CENTER, imp=imperfection)
    add("fixed-fixed(-4)", FIXED, FIXED, -4.0)
    add("fixed-fixed(+4)", FIXED, FIXED, +4.0)
    add("pinned-pinned(-4)", PINNED, PINNED, -4.0)
    add("pinned-pinned(+4)", PINNED, PINNED, +4.0)
    add("fixed-pinned(pin)", PINNED, FIXED, -4.0)
    add("fixed-pinned(fix)", PINNED, FIXED, +4.0)
    return out


def scenario_by_label(label: str, **kwargs) -> Scenario:
    for sc in builtin_scenarios(**kwargs):
        if sc.label == label:
            return sc
    labels = ", ".join(s.label for s in builtin_scenarios(**kwargs))
    raise SpecificationError(f"unknown scenario {label!r}; built-ins: {labels}")


# ---------------------------------------------------------------------------
# config files

def scenario_from_config(doc: dict) -> Scenario:
    """Scenario from a JSON-style config document.

    Recognized keys: label, boundary {left, right}, loading {attachment,
    bar_length, bar_mode, stroke, direction}, geometry {angle, cell_count,
    total_length, width, height, coil_thickness, depth, sweep_angle,
    inner_radius, growth_rate, anchor_offsets}, material {youngs_modulus,
    density}, imperfection, element_length. Missing keys use the defaults.
    """
    if not isinstance(doc, dict):
        raise SpecificationError("scenario config must be a JSON object")
    geo = dict(doc.get("geometry", {}))

    cell = default_unit_cell()
    spiral = cell.spiral
    sp_kw = {}
    if "sweep_angle" in geo:
        sp_kw["sweep_angle"] = float(geo.pop("sweep_angle"))
    if "inner_radius" in geo:
        sp_kw["inner_radius_a"] = float(geo.pop("inner_radius"))
    if "growth_rate" in geo:
        sp_kw["growth_rate_b"] = float(geo.pop("growth_rate"))
    if sp_kw:
        spiral = replace(spiral, **sp_kw)
    cell_kw = {}
    for key, attr in (("width", "width"), ("height", "height"),
                      ("coil_thickness", "coil_thickness")):
        if key in geo:
            cell_kw[attr] = float(geo.pop(key))
    cell = replace(cell, spiral=spiral, **cell_kw)

    beam_kw = {}
    if "cell_count" in geo:
        beam_kw["cell_count"] = int(geo.pop("cell_count"))
    if "total_length" in geo:
        beam_kw["total_length"] = float(geo.pop("total_length"))
    beam_spec = MetabeamSpec(cell=cell, **beam_kw)

    layout = build_structure(
        beam_spec,
        angle=float(geo.pop("angle", 35.0)),
        anchor_offsets=tuple(geo.pop("anchor_offsets", (-4.0, 4.0))),
        depth=float(geo.pop("depth", 10.0)),
    )
    if geo:
        raise SpecificationError(f"unknown geometry keys: {sorted(geo)}")

    bnd = doc.get("boundary", {})
    boundary = BoundaryPair(bnd.get("left", FIXED), bnd.get("right", FIXED))
    loading = LoadingSpec(**doc.get("loading", {}))
    mat = doc.get("material", {})
    material = Material(
        youngs_modulus=float(mat.get("youngs_modulus", 3500.0)),
        density=float(mat.get("density", 1.24e-9)),
    )
    return Scenario(
        layout=layout,
        boundary=boundary,
        loading=loading,
        label=doc.get("label", "custom"),
        imperfection=float(doc.get("imperfection", 0.0)),
        element_length=float(doc.get("element_length", DEFAULT_ELEMENT_LENGTH)),
        material=material,
    )


def load_scenario_config(path: str) -> Scenario:
    with open(path) as fh:
        return scenario_from_config(json.load(fh))
