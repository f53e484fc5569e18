import math

import numpy as np
import pytest

from snapspiral.errors import GeometryInfeasibleError, SpecificationError
from snapspiral.geometry import (
    MetabeamSpec,
    SpiralParams,
    UnitCellSpec,
    assemble_structure,
    build_structure,
    build_unit_cell,
    chain_cells,
    default_unit_cell,
    export_layout_svg,
    layout_from_dict,
    layout_to_dict,
    min_coil_gap,
    polyline_length,
    solve_growth_rate,
)


def test_default_cell_bounding_box():
    cell = build_unit_cell(default_unit_cell())
    lo = cell.min(axis=0)
    hi = cell.max(axis=0)
    assert np.allclose(hi - lo, [8.0, 10.0], atol=1e-9)


def test_default_cell_ports_on_chain_axis():
    cell = build_unit_cell(default_unit_cell())
    assert np.allclose(cell[0], [-4.0, 0.0], atol=1e-9)
    assert np.allclose(cell[-1], [4.0, 0.0], atol=1e-9)


def test_default_cell_point_symmetric():
    cell = build_unit_cell(default_unit_cell())
    flipped = -cell[::-1]
    assert np.allclose(cell, flipped, atol=1e-9)


def test_coil_gap_exceeds_thickness():
    spec = default_unit_cell()
    cell = build_unit_cell(spec)
    gap = min_coil_gap(cell, spec.samples_per_turn)
    assert gap > spec.coil_thickness


def test_solve_growth_rate_hits_target_gap():
    b = solve_growth_rate()
    spec = default_unit_cell()
    assert math.isclose(spec.spiral.growth_rate_b, b, rel_tol=1e-12)
    cell = build_unit_cell(spec)
    gap = min_coil_gap(cell, spec.samples_per_turn)
    assert math.isclose(gap, 0.8 + 0.2, rel_tol=0.05)


def test_overdense_sweep_is_infeasible():
    with pytest.raises(GeometryInfeasibleError):
        solve_growth_rate(sweep_angle=14.0 * math.pi)


def test_chain_length_and_cells():
    beam = chain_cells(MetabeamSpec())
    span = beam[-1] - beam[0]
    assert math.isclose(np.linalg.norm(span), 56.0, rel_tol=1e-9)


def test_structure_mirror_invariant():
    layout = build_structure()
    mirrored = layout.right_beam * np.array([-1.0, 1.0])
    assert np.allclose(layout.left_beam, mirrored, atol=1e-9)


def test_structure_defaults():
    layout = build_structure()
    assert layout.inclination_angle == 35.0
    assert layout.anchor_offsets == (-4.0, 4.0)
    assert layout.depth == 10.0
    assert layout.apex[1] < 0.0  # apex hangs below the support line
    assert np.allclose(layout.supports[:, 1], 0.0, atol=1e-9)


def test_anchor_points_on_apex_crossline():
    layout = build_structure()
    assert np.allclose(layout.anchor_points[:, 1], layout.apex[1], atol=1e-9)
    assert np.allclose(layout.anchor_points[:, 0], [-4.0, 4.0], atol=1e-9)


def test_bad_inclination_rejected():
    beam = chain_cells(MetabeamSpec())
    for angle in (0.0, 90.0, -5.0):
        with pytest.raises(SpecificationError):
            assemble_structure(beam, angle=angle)


def test_layout_dict_round_trip():
    layout = build_structure()
    again = layout_from_dict(layout_to_dict(layout))
    assert np.allclose(layout.left_beam, again.left_beam)
    assert np.allclose(layout.anchor_points, again.anchor_points)
    assert layout.inclination_angle == again.inclination_angle


def test_svg_export_deterministic(tmp_path):
    layout = build_structure()
    p1 = tmp_path / "a.svg"
    p2 = tmp_path / "b.svg"
    export_layout_svg(layout, str(p1))
    export_layout_svg(layout, str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    assert b"<svg" in p1.read_bytes()


def test_polyline_length_straight():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert math.isclose(polyline_length(pts), 5.0)


def test_spiral_params_validation():
    with pytest.raises(SpecificationError):
        SpiralParams(growth_rate_b=0.0)
    with pytest.raises(SpecificationError):
        UnitCellSpec(coil_thickness=5.0)
