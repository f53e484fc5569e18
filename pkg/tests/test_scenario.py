import json

import numpy as np
import pytest

from snapspiral.errors import SpecificationError
from snapspiral.scenario import (
    CENTER,
    FIXED,
    PINNED,
    BoundaryPair,
    LoadingSpec,
    Scenario,
    apply_boundary,
    attach_loading,
    build_system,
    builtin_scenarios,
    load_scenario_config,
    mesh_from_layout,
    scenario_by_label,
    scenario_from_config,
)

EXPECTED_LABELS = [
    "fixed-fixed",
    "pinned-pinned",
    "fixed-fixed(-4)",
    "fixed-fixed(+4)",
    "pinned-pinned(-4)",
    "pinned-pinned(+4)",
    "fixed-pinned(pin)",
    "fixed-pinned(fix)",
]


def test_builtin_suite_labels():
    labels = [sc.label for sc in builtin_scenarios()]
    assert labels == EXPECTED_LABELS


def test_scenario_by_label_unknown():
    with pytest.raises(SpecificationError):
        scenario_by_label("no-such-config")


def test_center_scenarios_carry_imperfection():
    for label in ("fixed-fixed", "pinned-pinned"):
        sc = scenario_by_label(label)
        assert sc.imperfection > 0.0
        assert sc.loading.attachment == CENTER
    for label in ("fixed-fixed(-4)", "fixed-pinned(fix)"):
        sc = scenario_by_label(label)
        assert sc.imperfection == 0.0


@pytest.mark.parametrize("label,n_fixed", [
    ("fixed-fixed", 6),
    ("pinned-pinned", 4),
    ("fixed-pinned(pin)", 5),
    ("fixed-pinned(fix)", 5),
])
def test_boundary_dof_counts(label, n_fixed):
    sc = scenario_by_label(label)
    mesh = mesh_from_layout(sc.layout, element_length=2.0)
    assert len(apply_boundary(mesh, sc.boundary)) == n_fixed


def test_mesh_tags_and_anchor_links():
    sc = scenario_by_label("fixed-fixed(-4)")
    mesh = mesh_from_layout(sc.layout, element_length=1.0)
    for tag in ("support_left", "support_right", "apex", "tip",
                "anchor_-4", "anchor_+4"):
        assert tag in mesh.tags
    apex = mesh.nodes[mesh.tags["apex"]]
    left = mesh.nodes[mesh.tags["anchor_-4"]]
    right = mesh.nodes[mesh.tags["anchor_+4"]]
    assert left[0] - apex[0] == pytest.approx(-4.0, abs=1e-9)
    assert right[0] - apex[0] == pytest.approx(+4.0, abs=1e-9)
    assert left[1] == pytest.approx(right[1], abs=1e-9)
    # anchors are rigid-link slaves of the apex
    masters = {l.slave: l.master for l in mesh.rigid_links}
    assert masters[mesh.tags["anchor_-4"]] == mesh.tags["apex"]
    assert masters[mesh.tags["anchor_+4"]] == mesh.tags["apex"]


def test_imperfection_shifts_apex_laterally():
    sc = scenario_by_label("fixed-fixed")
    m0 = mesh_from_layout(sc.layout, element_length=2.0, imperfection=0.0)
    m1 = mesh_from_layout(sc.layout, element_length=2.0, imperfection=0.01)
    a0 = m0.nodes[m0.tags["apex"]]
    a1 = m1.nodes[m1.tags["apex"]]
    assert a1[0] - a0[0] == pytest.approx(0.01, abs=1e-12)
    assert a1[1] == pytest.approx(a0[1], abs=1e-12)


def test_layout_mirror_symmetry():
    """The default structure is mirror-symmetric about the apex vertical."""
    sc = scenario_by_label("fixed-fixed")
    mesh = mesh_from_layout(sc.layout, element_length=1.0)
    cx = sc.layout.apex[0]
    ls = mesh.nodes[mesh.tags["support_left"]]
    rs = mesh.nodes[mesh.tags["support_right"]]
    assert ls[0] - cx == pytest.approx(-(rs[0] - cx), abs=1e-6)
    assert ls[1] == pytest.approx(rs[1], abs=1e-6)


def test_attach_loading_offsets():
    sc = scenario_by_label("fixed-fixed")
    mesh = mesh_from_layout(sc.layout, element_length=2.0)
    att = attach_loading(mesh, LoadingSpec(attachment=CENTER))
    assert np.allclose(att.offset, 0.0)
    att = attach_loading(mesh, LoadingSpec(attachment=4.0))
    assert att.offset[0] == pytest.approx(4.0, abs=1e-9)
    with pytest.raises(SpecificationError):
        attach_loading(mesh, LoadingSpec(attachment=2.5))


def test_attachment_outside_block_rejected():
    sc = scenario_by_label("fixed-fixed")
    with pytest.raises(SpecificationError):
        Scenario(layout=sc.layout, boundary=sc.boundary,
                 loading=LoadingSpec(attachment=25.0), label="bad")


def test_loading_spec_validation():
    with pytest.raises(SpecificationError):
        LoadingSpec(stroke=0.0)
    with pytest.raises(SpecificationError):
        LoadingSpec(bar_mode="diagonal")
    with pytest.raises(SpecificationError):
        LoadingSpec(bar_length=-1.0)
    with pytest.raises(SpecificationError):
        BoundaryPair("welded", FIXED)


def test_build_system_smoke():
    sc = scenario_by_label("pinned-pinned", stroke=10.0)
    system = build_system(sc)
    assert system.mesh.n_nodes > 100
    assert sc.loading.stroke == 10.0


def test_config_round_trip(tmp_path):
    doc = {
        "label": "custom-pp",
        "boundary": {"left": PINNED, "right": PINNED},
        "loading": {"attachment": -4.0, "stroke": 20.0},
        "geometry": {"angle": 30.0, "cell_count": 6},
        "material": {"youngs_modulus": 3000.0},
        "imperfection": 0.0,
        "element_length": 1.0,
    }
    sc = scenario_from_config(doc)
    assert sc.label == "custom-pp"
    assert sc.boundary.left == PINNED
    assert sc.loading.attachment == -4.0
    assert sc.material.youngs_modulus == 3000.0
    assert sc.element_length == 1.0

    p = tmp_path / "sc.json"
    p.write_text(json.dumps(doc))
    sc2 = load_scenario_config(str(p))
    assert sc2.label == sc.label
    assert sc2.boundary == sc.boundary
    assert sc2.loading == sc.loading
    assert sc2.material == sc.material
    assert np.allclose(sc2.layout.left_beam, sc.layout.left_beam, atol=0)


def test_config_unknown_geometry_key():
    with pytest.raises(SpecificationError):
        scenario_from_config({"geometry": {"twist": 1.0}})
    with pytest.raises(SpecificationError):
        scenario_from_config([1, 2, 3])
