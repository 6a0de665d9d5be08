import os
import subprocess
import sys

import pytest

from manetsim.config import ConfigError, ScenarioConfig, parse_config_file, validate_config
from manetsim.metrics import CSV_HEADER
from manetsim.runner import SweepSpec, run_scenario, sweep


# -- config -----------------------------------------------------------------

def test_defaults_reproduce_reference_setup():
    cfg = validate_config({})
    assert (cfg.area_width, cfg.area_height) == (500.0, 500.0)
    assert cfg.pkt_size == 512
    assert cfg.sim_time == 300.0
    assert cfg.nodes == 60
    assert cfg.protocol == "aodv"
    assert cfg.radio.range == 250.0
    assert cfg.radio.bandwidth == 2_000_000.0


def test_zero_pkt_size_error_names_field():
    with pytest.raises(ConfigError) as err:
        validate_config({"pkt_size": 0})
    assert any("pkt_size" in e for e in err.value.errors)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        validate_config({"banana": 1})
    assert any("banana" in e for e in err.value.errors)


def test_errors_aggregate():
    with pytest.raises(ConfigError) as err:
        validate_config({"pkt_size": 0, "nodes": 0, "rate": -1})
    assert len(err.value.errors) == 3


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "scenario.cfg"
    path.write_text(
        "# comparison scenario\n"
        "protocol = dsr\n"
        "nodes = 40\n"
        "max_speed = 20  # m/s\n"
        "radio.range = 200\n"
        "aodv.active_route_lifetime = 5\n"
        "flow.0 = 1 7 4.0 5.0 295.0\n")
    cfg = validate_config(parse_config_file(str(path)))
    assert cfg.protocol == "dsr"
    assert cfg.nodes == 40
    assert cfg.max_speed == 20.0
    assert cfg.radio.range == 200.0
    assert cfg.protocol_params == {"aodv": {"active_route_lifetime": "5"}}
    assert len(cfg.flow_list) == 1
    assert cfg.flow_list[0].src == 1 and cfg.flow_list[0].dst == 7


def test_bad_flow_spec_reports_index():
    with pytest.raises(ConfigError) as err:
        validate_config({"flow.0": "1 2 3"})
    assert any("flow.0" in e for e in err.value.errors)


# -- single runs ----------------------------------------------------------------

def small_cfg(**kw):
    base = dict(nodes=15, sim_time=20.0, flows=3, seed=1, max_speed=15.0)
    base.update(kw)
    return validate_config(base)


def test_run_scenario_sane_envelope(tmp_path):
    res = run_scenario(small_cfg())
    assert res.consistent
    assert res.row.psnd > 0
    assert 0.0 <= res.row.pdf <= 100.0
    assert res.row.throughput_ratio == res.row.pdf / 100.0
    assert res.row.avg_e2e_delay_s is None or res.row.avg_e2e_delay_s >= 0.0


def test_same_config_gives_identical_trace_bytes(tmp_path):
    p1, p2 = str(tmp_path / "a.tr"), str(tmp_path / "b.tr")
    r1 = run_scenario(small_cfg(), trace_path=p1)
    r2 = run_scenario(small_cfg(), trace_path=p2)
    assert r1.trace_sha256 == r2.trace_sha256
    assert open(p1, "rb").read() == open(p2, "rb").read()
    assert r1.row == r2.row


def test_different_seed_changes_trace(tmp_path):
    r1 = run_scenario(small_cfg(seed=1))
    r2 = run_scenario(small_cfg(seed=2))
    assert r1.trace_sha256 != r2.trace_sha256


def test_degenerate_single_node_reports_absent_metrics():
    cfg = validate_config({"nodes": 1, "flows": 0, "sim_time": 5.0})
    res = run_scenario(cfg)
    assert res.row.psnd == 0
    assert res.row.pdf is None
    assert res.row.throughput_ratio is None
    assert res.row.avg_e2e_delay_s is None
    line = res.row.csv_line()
    assert ",,," in line        # absent metrics render as empty cells


# -- sweep ------------------------------------------------------------------------

def mini_spec():
    base = validate_config({"nodes": 10, "sim_time": 10.0, "flows": 2})
    return SweepSpec(base=base, protocols=("aodv", "dsr"), node_counts=(10,),
                     speeds=(0, 20), seeds=(1, 2))


def test_sweep_grid_rows_and_order(tmp_path):
    out = str(tmp_path / "results.csv")
    rows, errors = sweep(mini_spec(), out, workers=1)
    assert rows == 8 and errors == []
    lines = open(out).read().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 9
    cells = [tuple(l.split(",")[:4]) for l in lines[1:]]
    assert cells == [
        ("aodv", "10", "0.0", "1"), ("aodv", "10", "0.0", "2"),
        ("aodv", "10", "20.0", "1"), ("aodv", "10", "20.0", "2"),
        ("dsr", "10", "0.0", "1"), ("dsr", "10", "0.0", "2"),
        ("dsr", "10", "20.0", "1"), ("dsr", "10", "20.0", "2"),
    ]


def test_sweep_parallel_equals_serial(tmp_path):
    out1 = str(tmp_path / "serial.csv")
    out2 = str(tmp_path / "parallel.csv")
    sweep(mini_spec(), out1, workers=1)
    sweep(mini_spec(), out2, workers=2)
    assert open(out1).read() == open(out2).read()


def test_paper_grid_shape():
    spec = SweepSpec(seeds=(1,))
    assert len(spec.cells()) == 3 * 2 * 7 * 1 == 42


# -- CLI ----------------------------------------------------------------------------

def run_cli(*args):
    env = dict(os.environ, PYTHONPATH=os.path.join(os.path.dirname(__file__), "..", "src"))
    return subprocess.run([sys.executable, "-m", "manetsim.cli", *args],
                          capture_output=True, text=True, env=env)


def test_cli_run_prints_csv(tmp_path):
    trace = str(tmp_path / "o.tr")
    proc = run_cli("run", "--nodes", "8", "--time", "8", "--flows", "1",
                   "--seed", "3", "--trace", trace)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[1].startswith("aodv,8,")
    assert os.path.exists(trace)


def test_cli_metrics_recomputes_from_trace(tmp_path):
    trace = str(tmp_path / "o.tr")
    run_cli("run", "--nodes", "8", "--time", "8", "--flows", "1",
            "--seed", "3", "--trace", trace)
    proc = run_cli("metrics", "--trace", trace, "--protocol", "aodv",
                   "--nodes", "8", "--time", "8")
    assert proc.returncode == 0
    row = proc.stdout.strip().splitlines()[1]
    direct = run_cli("run", "--nodes", "8", "--time", "8", "--flows", "1", "--seed", "3")
    assert row.split(",")[4:6] == direct.stdout.strip().splitlines()[1].split(",")[4:6]


def test_cli_rejects_bad_config():
    proc = run_cli("run", "--nodes", "0")
    assert proc.returncode == 2
    assert "nodes" in proc.stderr
