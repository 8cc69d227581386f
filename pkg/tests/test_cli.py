import gzip
import json
import subprocess
import sys

import numpy as np
import pytest

from vrrw.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_threshold_table_output(capsys):
    code, out, err = run_cli(capsys, "thresholds", "--c", "0", "--kmax", "5")
    assert code == 0
    rows = [line.split() for line in out.strip().splitlines()[1:]]
    assert [r[0] for r in rows] == ["3", "4", "5"]
    assert float(rows[0][1]) == 2.0
    assert float(rows[1][1]) == 1.5
    assert float(rows[2][1]) == 4 / 3  # 17 digits round-trip exactly
    assert "seed:" in err and "config-hash:" in err


def test_two_site_equilibria_listing(capsys):
    code, out, _ = run_cli(capsys, "equilibria", "--n", "2", "--alpha", "3")
    assert code == 0
    assert "stable" in out
    assert out.count("face_center") == 1


def test_equilibria_json_schema(capsys):
    code, out, _ = run_cli(capsys, "equilibria", "--n", "3", "--alpha", "2.5", "--json")
    assert code == 0
    entries = json.loads(out)
    assert len(entries) == 7
    assert set(entries[0]) == {"support", "kind", "point", "eigenvalues", "verdict", "t", "k"}
    # text ordering contract: support size, then sites, then ratio
    sizes = [len(e["support"]) for e in entries]
    assert sizes == sorted(sizes)
    kinds = {e["kind"] for e in entries}
    assert kinds == {"face_center", "two_level"}
    two = [e for e in entries if e["kind"] == "two_level"]
    assert all(e["t"] is not None and e["k"] == 1 for e in two)
    assert all(e["verdict"] == "unstable" for e in two)


def test_flow_writes_lossless_csv(tmp_path, capsys):
    out_path = tmp_path / "flow.csv"
    code, out, _ = run_cli(
        capsys,
        "flow", "--n", "3", "--alpha", "2.5",
        "--v0", "0.5,0.3,0.2", "--t", "1.0", "--out", str(out_path),
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "t,v_1,v_2,v_3,H"
    first = [float(x) for x in lines[1].split(",")]
    assert first[:4] == [0.0, 0.5, 0.3, 0.2]
    h = np.array([float(l.split(",")[-1]) for l in lines[1:]])
    assert np.all(np.diff(h) >= -1e-9)


def test_flow_rejects_bad_mass(capsys):
    code, _, err = run_cli(
        capsys, "flow", "--n", "3", "--alpha", "2.5", "--v0", "0.5,0.3,0.3", "--t", "1"
    )
    assert code == 3
    assert "sum" in err


def test_simulate_round_trips_compressed_sites(tmp_path, capsys):
    out_path = tmp_path / "traj.csv.gz"
    code, _, err = run_cli(
        capsys,
        "simulate", "--n", "3", "--alpha", "2.5",
        "--start", "1", "--horizon", "300", "--seed", "42", "--out", str(out_path),
    )
    assert code == 0
    assert "final counts" in err
    body = gzip.decompress(out_path.read_bytes()).decode()
    lines = body.splitlines()
    assert lines[0] == "step,site"
    sites = np.array([int(l.split(",")[1]) for l in lines[1:]])
    assert lines[1] == "0,1"
    assert sites.min() >= 1 and sites.max() <= 3
    assert len(sites) == 301

    again = tmp_path / "traj2.csv.gz"
    code2, _, _ = run_cli(
        capsys,
        "simulate", "--n", "3", "--alpha", "2.5",
        "--start", "1", "--horizon", "300", "--seed", "42", "--out", str(again),
    )
    assert code2 == 0
    assert out_path.read_bytes() == again.read_bytes()


def test_simulate_reads_config_with_flag_overrides(tmp_path, capsys):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({
        "model": {"n": 3, "alpha": 2.5, "c": 0},
        "start": 1, "horizon": 50, "seed": 7,
    }))
    code, out, err = run_cli(capsys, "simulate", "--config", str(cfg), "--log", "checkpoints")
    assert code == 0
    assert out.splitlines()[0] == "n,v_1,v_2,v_3"
    # flags beat the file
    code2, _, err2 = run_cli(
        capsys, "simulate", "--config", str(cfg), "--horizon", "80",
        "--log", "checkpoints",
    )
    assert code2 == 0
    assert "over 80 steps" in err2


def test_simulate_seed_env_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("VRRW_SEED", "314")
    code, _, err = run_cli(
        capsys, "simulate", "--n", "3", "--alpha", "2", "--start", "1",
        "--horizon", "20", "--log", "checkpoints",
    )
    assert code == 0
    assert "seed: 314" in err


def test_rubin_emits_jump_table(tmp_path, capsys):
    out_path = tmp_path / "rubin.csv"
    code, _, _ = run_cli(
        capsys,
        "rubin", "--n", "3", "--alpha", "1.5",
        "--start", "1", "--jumps", "40", "--seed", "7", "--out", str(out_path),
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "step,site,time"
    assert lines[1].startswith("0,1,0")
    times = np.array([float(l.split(",")[2]) for l in lines[1:]])
    assert np.all(np.diff(times) > 0)
    assert len(lines) == 42


def test_campaign_command_writes_exports(tmp_path, capsys):
    cfg = tmp_path / "camp.json"
    cfg.write_text(json.dumps({
        "model": {"n": 3, "alpha": 2.5, "c": 0},
        "replicas": 5, "horizon": 2000, "base_seed": 77,
        "start": "uniform-random",
        "detection": {"tail_fraction": 0.5, "min_share": 0.02},
    }))
    out_dir = tmp_path / "results"
    code, out, err = run_cli(
        capsys, "campaign", "--config", str(cfg), "--out", str(out_dir),
        "--format", "csv",
    )
    assert code == 0
    assert "replicas: 5" in out
    files = list(out_dir.iterdir())
    assert len(files) == 1 and files[0].suffix == ".csv"
    header = files[0].read_text().splitlines()[0]
    assert header.startswith("replica,seed,support_size,support,occ_1")
    # flag overrides shrink the run
    out_dir2 = tmp_path / "results2"
    code2, out2, _ = run_cli(
        capsys, "campaign", "--config", str(cfg), "--out", str(out_dir2),
        "--format", "json", "--replicas", "2",
    )
    assert code2 == 0
    assert "replicas: 2" in out2
    payload = json.loads((out_dir2 / "campaign.json").read_text())
    assert len(payload["replicas"]) == 2


def test_unknown_flag_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, "equilibria", "--n", "3", "--alpha", "2.5", "--nope")
    assert code == 2


def test_missing_subcommand_is_usage_error(capsys):
    assert run_cli(capsys)[0] == 2


def test_domain_violation_maps_to_exit_three(capsys):
    code, _, err = run_cli(capsys, "equilibria", "--n", "1", "--alpha", "2.5")
    assert code == 3
    assert err.strip()


def test_io_failure_maps_to_exit_four(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "flow", "--n", "3", "--alpha", "2.5", "--v0", "0.4,0.3,0.3",
        "--t", "0.5", "--out", str(tmp_path / "missing" / "flow.csv"),
    )
    assert code == 4


def test_help_screens_document_flags():
    for sub in ("equilibria", "thresholds", "flow", "simulate", "rubin", "campaign"):
        proc = subprocess.run(
            [sys.executable, "-m", "vrrw.cli", sub, "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "--" in proc.stdout


def test_console_script_entry_point():
    proc = subprocess.run(
        ["vrrw", "thresholds", "--c", "0", "--kmax", "4"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "1.5" in proc.stdout
