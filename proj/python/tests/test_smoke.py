import math

import numpy as np
import pytest

import isacbf

SMALL = {"system": {"num_bs_antennas": 4, "num_irs_elements": 4, "num_irs_sensors": 4, "max_power": 40.0,
                    "sinr_threshold": 3.0},
         "orchestrator": {"draws": 100, "max_iters": 5}}


def test_default_config_round_trip():
    cfg = isacbf.default_config()
    assert cfg["system"]["num_bs_antennas"] == 8
    with pytest.raises(isacbf.ParameterError):
        isacbf.build_scenario({"system": {"no_such_key": 1}})


def test_scenario_json_round_trip():
    s = isacbf.build_scenario(SMALL, seed=3)
    assert s.num_bs_antennas == 4
    assert s.bs_irs(0).shape == (4, 4)
    again = isacbf.Scenario.from_json(s.to_json())
    assert again.to_json() == s.to_json()


def test_crb_routes_agree():
    s = isacbf.build_scenario(SMALL, seed=1)
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rx = a @ a.conj().T
    phi = np.exp(1j * rng.uniform(0, 2 * math.pi, 4))
    r = isacbf.point_crb_routes(s, 0, rx, phi)
    assert r["schur"] == pytest.approx(r["closed"], rel=1e-8)
    assert r["schur"] == pytest.approx(r["inverse"], rel=1e-8)
    assert isacbf.point_crb(s, 0, rx, phi) == pytest.approx(r["schur"], rel=1e-8)
    assert isacbf.extended_crb(s, 0, rx) > 0


def test_optimize_is_monotone_and_deterministic():
    s = isacbf.build_scenario(SMALL, seed=2)
    t = isacbf.optimize(s, "P1-I", config=SMALL, seed=2)
    crbs = [it["max_crb"] for it in t.iterations]
    assert crbs and all(b <= a * (1 + 1e-8) for a, b in zip(crbs, crbs[1:]))
    assert t.final_crb == pytest.approx(crbs[-1])
    assert np.trace(t.total_covariance()).real <= 40.0 * (1 + 1e-6)
    assert isacbf.optimize(s, "P1-I", config=SMALL, seed=2).final_crb == t.final_crb


def test_infeasible_raises_or_reports():
    cfg = {"system": dict(SMALL["system"], sinr_threshold=1e9), "orchestrator": SMALL["orchestrator"]}
    s = isacbf.build_scenario(cfg, seed=1)
    t = isacbf.optimize(s, "P1-I", config=cfg, seed=1)
    assert t.stop == "infeasible" and math.isinf(t.final_crb)


def test_run_cli():
    code, out, _ = isacbf.run_cli(["optimize", "--seed=1", "--variant=P4-I", "--num_bs_antennas=4",
                                   "--num_irs_elements=4", "--draws=100"])
    assert code == 0
    assert out.startswith("#schema=isac-trajectory/1\n")
    assert isacbf.run_cli(["bogus"])[0] == 64
