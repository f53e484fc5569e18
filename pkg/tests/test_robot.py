import numpy as np
import pytest

from snapspiral.errors import SpecificationError
from snapspiral.robot import (
    MODE_FIX,
    MODE_PIN,
    RobotSpec,
    fin_shape_sequence,
    segment_thrust,
    simulate_swim,
)


@pytest.fixture(scope="module")
def swim(traced):
    """mode -> (spec, CycleResult) with default hydrodynamic settings."""
    out = {}
    for mode, label in ((MODE_FIX, "fixed-pinned(fix)"),
                        (MODE_PIN, "fixed-pinned(pin)")):
        sc, system, path, _ = traced(label)
        spec = RobotSpec(mode=mode, cycles=3)
        out[mode] = (spec, path, system.mesh.nodes,
                     simulate_swim(spec, path, system.mesh.nodes))
    return out


def test_spec_validation():
    with pytest.raises(SpecificationError):
        RobotSpec(mode="loose")
    with pytest.raises(SpecificationError):
        RobotSpec(pull_fraction=1.0)
    with pytest.raises(SpecificationError):
        RobotSpec(steps_per_cycle=100)
    with pytest.raises(SpecificationError):
        RobotSpec(cycle_time=-0.1)


def test_fin_shape_sequence_shape(swim):
    spec, path, nodes, _ = swim[MODE_FIX]
    times, states = fin_shape_sequence(path, spec)
    assert times.shape == (spec.steps_per_cycle + 1,)
    assert times[0] == 0.0 and times[-1] == pytest.approx(spec.cycle_time)
    assert states.shape == (spec.steps_per_cycle + 1, 3 * nodes.shape[0])
    # the cycle ends where it starts (full pull + release program)
    assert np.allclose(states[0], states[-1], atol=1e-6)


def test_fin_snap_velocity_bounded(swim):
    """Snap smearing makes peak shape velocity resolution-independent."""
    spec, path, nodes, _ = swim[MODE_FIX]

    def vmax(s):
        _, states = fin_shape_sequence(path, s)
        dt = s.cycle_time / s.steps_per_cycle
        return np.linalg.norm(np.diff(states, axis=0), axis=1).max() / dt

    coarse = vmax(spec)
    fine = vmax(RobotSpec(mode=MODE_FIX, cycles=spec.cycles,
                          steps_per_cycle=2 * spec.steps_per_cycle))
    # without smearing a snap's one-step jump would double this ratio
    assert fine < 1.25 * coarse


def test_segment_thrust_sign():
    """A flat blade sweeping -y pushes the body +y (and vice versa)."""
    spec = RobotSpec()
    x0 = np.array([[0.0, 0.0], [10.0, 0.0]])
    down = x0 + np.array([0.0, -1.0])
    up = x0 + np.array([0.0, +1.0])
    assert segment_thrust(x0, down, 0.01, 0.0, spec) > 0.0
    assert segment_thrust(x0, up, 0.01, 0.0, spec) < 0.0
    # pure in-plane sliding along the blade produces no normal force
    slide = x0 + np.array([1.0, 0.0])
    assert segment_thrust(x0, slide, 0.01, 0.0, spec) == pytest.approx(0.0)


def test_fix_outruns_pin(swim):
    fix = swim[MODE_FIX][3]
    pin = swim[MODE_PIN][3]
    assert fix.mean_cycle_displacement >= 2.0 * pin.mean_cycle_displacement
    assert pin.mean_cycle_displacement > 0.0


def test_pin_mode_reciprocating_backward_segments(swim):
    pin = swim[MODE_PIN][3]
    assert all(pin.backward_segment_present[1:])


def test_fix_mode_minimal_backward_slip(swim):
    fix = swim[MODE_FIX][3]
    for back, fwd in zip(fix.per_cycle_backward[1:], fix.per_cycle_forward[1:]):
        assert back < 0.10 * fwd


def test_simulation_deterministic(swim):
    spec, path, nodes, res = swim[MODE_PIN]
    again = simulate_swim(spec, path, nodes)
    assert np.array_equal(res.body_position, again.body_position)
    assert np.array_equal(res.thrust, again.thrust)


def test_steps_doubling_converged(swim):
    spec, path, nodes, res = swim[MODE_FIX]
    fine = simulate_swim(RobotSpec(mode=MODE_FIX, cycles=3,
                                   steps_per_cycle=4000), path, nodes)
    rel = abs(fine.mean_cycle_displacement - res.mean_cycle_displacement)
    assert rel < 0.01 * abs(res.mean_cycle_displacement)
