import math

import pytest

import hopsim
from hopsim import emulator


def test_steady_episode():
    hopper = hopsim.HopperParams.reference(4300, 35)
    ground = hopsim.GroundProfile(4400, 35)
    cfg = hopsim.EpisodeConfig()
    cfg.record_trajectory = True
    o = hopsim.run_episode(hopper, ground, 1.5, cfg)
    assert o.status == hopsim.EpisodeStatus.SteadyHopping
    assert abs(o.steady_apex_mean - 0.011614929947) < 1e-9
    assert len(o.hops) == 60
    traj = o.trajectory
    assert traj.shape[1] == 6 and traj.shape[0] > 100
    assert abs(hopsim.precompression(1.5, 4300) - o.precompression) < 1e-15


def test_failed_episode():
    o = hopsim.run_episode(hopsim.HopperParams.reference(5000, 35), hopsim.GroundProfile(2400, 75), 1.0)
    assert o.status == hopsim.EpisodeStatus.FailedLiftoff
    assert math.isnan(o.steady_apex_mean)


def test_errors_carry_codes():
    with pytest.raises(hopsim.HopsimError) as e:
        hopsim.GroundProfile(-1, 10)
    assert e.value.code == "InvalidArgument"
    with pytest.raises(hopsim.HopsimError) as e:
        hopsim.parse_config("hopper:\n  bogus: 1\n", "x.yaml")
    assert e.value.code == "Config"
    assert str(e.value).startswith("x.yaml:2:3:")


def test_small_sweep_and_select():
    spec = hopsim.SweepSpec()
    spec.leg_damping = [35.0]
    spec.energies = [1.56]
    spec.ground_stiffness = hopsim.GridRange(4600, 400, 5400)
    spec.ground_damping = hopsim.GridRange(15, 30, 75)
    r = hopsim.run_sweep(spec)
    assert r.ground_cells() == 9
    maps = hopsim.best_stiffness_map(r, spec.tie_threshold)
    assert len(maps) == 1
    assert hopsim.select_stiffness(maps[0], 5400, 15) in (3000, 4000, 5000)
    assert hopsim.success_region(r, 1.56, 35).count() > 0
    assert hopsim.check_trends(r, 35, 1.56) == []


def test_config_defaults():
    cfg = hopsim.parse_config(hopsim.default_config_text())
    assert len(cfg.sweep.ground_stiffness) * len(cfg.sweep.ground_damping) == 208
    assert cfg.hopper.rest_length == 0.0975


def test_emulator_fit():
    geom = emulator.LinkageGeometry(0.1, 0.2)
    assert abs(emulator.forward_kinematics(0.0, geom) - 0.1) < 1e-12
    truth = emulator.OscillatorParams(0.02, 1200.0, 4.0)
    trace = emulator.synthesize_trace(truth, 2.0, 0.75, 1000.0)
    fit = emulator.fit_oscillator(trace)
    assert abs(fit.ground_stiffness - 2400) < 1e-3
    assert abs(fit.ground_damping - 16) < 1e-4
    assert fit.accepted
