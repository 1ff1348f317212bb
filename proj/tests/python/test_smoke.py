import os
import pathlib

import pytest

import ivnsim

SCENARIOS = pathlib.Path(
    os.environ.get("IVNSIM_SCENARIO_DIR", pathlib.Path(__file__).resolve().parents[2] / "scenarios")
)
SMALL = SCENARIOS / "small_network.andl"
EXTENSION = SCENARIOS / "recbar_extension.andl"


def small_config(**overrides):
    return ivnsim.compile(SMALL.read_text(), overrides=overrides or None)


def test_compile_small_network():
    cfg = small_config()
    assert cfg.network == "smallNetwork"
    assert len(cfg.devices) == 7
    assert len(cfg.links) == 4
    assert cfg.buses == ["cb1", "cb2"]
    assert cfg.messages == ["msg1", "msg2"]


def test_avb_latency_matches_frame_arithmetic():
    sim = ivnsim.run(small_config(), horizon="10ms")
    frame_ps = (500 + 38) * 8 * 10_000  # 100 Mbit/s: 10 ns per bit
    samples = sim.latencies("msg2", "en2")
    assert len(samples) == 81
    assert {lat for _, lat in samples} == {2 * frame_ps + ivnsim.parse_time("8us")}


def test_pooled_can_flow_is_delivered():
    sim = ivnsim.run(small_config(), horizon="100ms")
    msg1 = sim.report["messages"]["msg1"]
    assert msg1["released"] == msg1["delivered"] == 101
    assert sim.report["tt_violations"] == 0


def test_overrides_change_the_run():
    sim = ivnsim.run(small_config(**{"msg2.period": "250us"}), horizon="10ms")
    assert sim.report["messages"]["msg2"]["released"] == 41


def test_validate_reports_errors_with_positions():
    diags = ivnsim.validate("network n {\n  devices {\n    node a\n  }\n}\n")
    assert diags and diags[0]["severity"] == "error"
    assert diags[0]["line"] == 4
    assert ivnsim.validate(SMALL.read_text()) == [] or all(
        d["severity"] == "warning" for d in ivnsim.validate(SMALL.read_text())
    )


def test_compile_error_raises():
    with pytest.raises(ivnsim.ConfigError):
        ivnsim.compile("network n { devices { node a; node a; } }")


def test_json_round_trip():
    cfg = small_config()
    again = ivnsim.from_json(cfg.to_json())
    assert again.to_json() == cfg.to_json()


def test_merge_and_export(tmp_path):
    cfg = ivnsim.load([str(SMALL), str(EXTENSION)])
    assert sum(1 for _, kind in cfg.devices if kind == "switch") == 4
    sim = ivnsim.Simulation(cfg, horizon="20ms", seed=5)
    sim.run()
    files = sim.export(tmp_path, "structured")
    assert [p.name for p in files] == ["results.json"]
    assert any(name.endswith("bitsPerSec") for name in sim.scalars())


def test_determinism():
    a = ivnsim.run(small_config(), horizon="20ms", seed=3)
    b = ivnsim.run(small_config(), horizon="20ms", seed=3)
    assert a.scalars() == b.scalars()
    assert a.report == b.report


def test_cli_in_process(tmp_path):
    rc, out, _ = ivnsim.cli(["run", str(SMALL), "--horizon", "5ms", "--out", str(tmp_path / "r")])
    assert rc == 0 and "results in" in out
    rc, out, _ = ivnsim.cli(["analyze", str(tmp_path / "r"), "--metric", "latency"])
    assert rc == 0 and "msg2" in out
    assert ivnsim.cli(["validate", str(tmp_path / "missing.andl")])[0] == 2


def test_time_helpers():
    assert ivnsim.parse_time("125us") == 125_000_000
    assert ivnsim.format_time(125_000_000) == "125us"
    with pytest.raises(ivnsim.Error):
        ivnsim.run(small_config(), horizon="soon")
