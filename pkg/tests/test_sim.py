"""Harness tests: determinism, stop rule, CSV contracts, CLI."""
import json
import subprocess
import sys

import pytest

from dot11p.sim import (
    SimConfig,
    emit_bitrate_table,
    emit_csv,
    run_point,
    run_sweep,
    wilson_interval,
)


def small_cfg(**kw):
    base = dict(
        mcs_index=2, nfb_bytes=60, frame_kind="sf", receiver="sfmmse",
        esn0_db=(12.0,), frames=60, max_errors=None, master_seed=9,
    )
    base.update(kw)
    return SimConfig(**base)


def test_noiseless_point_has_no_errors():
    cfg = small_cfg(esn0_db=(1000.0,), frames=30, receiver="perfect")
    r = run_point(cfg, 1000.0, 0)
    assert r.frame_errors == 0
    assert r.fer == 0.0
    assert r.undetected_errors == 0


def test_awgn_only_sanity():
    # static single-tap channel at 30 dB: no frame should fail
    cfg = small_cfg(
        esn0_db=(30.0,), frames=100, receiver="perfect",
        n_taps=1, velocity_kmph=0.0,
    )
    r = run_point(cfg, 30.0, 0)
    assert r.frame_errors == 0


def test_determinism_same_seed():
    cfg = small_cfg(esn0_db=(8.0,))
    a = run_point(cfg, 8.0, 0)
    b = run_point(cfg, 8.0, 0)
    assert (a.frames_run, a.frame_errors) == (b.frames_run, b.frame_errors)


def test_seed_changes_trial_outcomes():
    from dot11p.sim import PointContext

    outcomes = {}
    for seed in (9, 10):
        ctx = PointContext(small_cfg(esn0_db=(8.0,), master_seed=seed), 8.0)
        outcomes[seed] = [ctx.run_trial(0, t)[0] for t in range(50)]
    assert outcomes[9] != outcomes[10]


def test_worker_count_does_not_change_results():
    serial = run_point(small_cfg(esn0_db=(8.0,), frames=220), 8.0, 0)
    parallel = run_point(
        small_cfg(esn0_db=(8.0,), frames=220, workers=2), 8.0, 0
    )
    assert (serial.frames_run, serial.frame_errors) == (
        parallel.frames_run, parallel.frame_errors
    )


def test_stop_rule_batches():
    # at 6 dB this short QPSK frame fails often; the run must stop early on
    # a batch boundary once the error target is met
    cfg = small_cfg(esn0_db=(5.0,), frames=2000, max_errors=20)
    r = run_point(cfg, 5.0, 0)
    assert r.frame_errors >= 20
    assert r.frames_run < 2000
    assert r.frames_run % 100 == 0


def test_stop_rule_unbiased_expectation():
    """Stop-at-errors and fixed-frames agree on the same trial stream."""
    fixed = run_point(small_cfg(esn0_db=(6.0,), frames=400), 6.0, 0)
    stopped = run_point(
        small_cfg(esn0_db=(6.0,), frames=400, max_errors=10**9), 6.0, 0
    )
    assert fixed.frame_errors == stopped.frame_errors


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_mf_too_short_rejected():
    with pytest.raises(Exception):
        SimConfig(nfb_bytes=3, frame_kind="mf", m_p=8)


def test_sweep_and_csv(tmp_path):
    cfg = small_cfg(esn0_db=(30.0, 10.0), frames=20, receiver="perfect")
    results, manifest = run_sweep(cfg)
    assert [r.esn0_db for r in results] == [30.0, 10.0]
    assert manifest["config"]["nfb_bytes"] == 60
    path = tmp_path / "out.csv"
    emit_csv(cfg, results, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == (
        "mcs,nfb_bytes,frame,mp,velocity_kmph,receiver,"
        "esn0_db,frames,errors,fer,ci_lo,ci_hi"
    )
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "2" and first[5] == "perfect" and first[6] == "30.0"


def test_bitrate_table(tmp_path):
    path = tmp_path / "rates.csv"
    emit_bitrate_table(2, [8, 16], range(1, 400), path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n_fb_bytes,r_sf_mbps,r_mf_mbps_mp8,r_mf_mbps_mp16"
    assert len(lines) == 400
    rows = [ln.split(",") for ln in lines[1:]]
    # too-short MFs come out blank
    assert rows[0][2] == ""
    for row in rows:
        if row[2] and row[3]:
            assert float(row[3]) > float(row[2])
            assert float(row[1]) > float(row[2])
    lookup = {int(r[0]): r for r in rows}
    assert float(lookup[146][1]) == pytest.approx(3.9459, abs=0.01)
    assert float(lookup[146][2]) == pytest.approx(3.5610, abs=0.01)


def test_empty_results_csv(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv(small_cfg(), [], path)
    assert path.read_text().strip().splitlines() == [
        "mcs,nfb_bytes,frame,mp,velocity_kmph,receiver,"
        "esn0_db,frames,errors,fer,ci_lo,ci_hi"
    ]


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "dot11p"] + args, capture_output=True, text=True
    )


def test_cli_help():
    proc = run_cli(["--help"])
    assert proc.returncode == 0
    for flag in ("--mcs", "--nfb-bytes", "--frame", "--mp", "--velocity-kmph",
                 "--receiver", "--esn0", "--frames", "--max-errors", "--seed",
                 "--out", "--bitrate-table"):
        assert flag in proc.stdout


def test_cli_small_run(tmp_path):
    out = tmp_path / "run.csv"
    proc = run_cli([
        "--mcs", "2", "--nfb-bytes", "40", "--frame", "sf",
        "--receiver", "perfect", "--esn0", "30", "--frames", "20",
        "--seed", "3", "--out", str(out),
    ])
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert (tmp_path / "run.csv.manifest.json").exists()
    body = out.read_text().splitlines()
    assert body[1].split(",")[8] == "0"  # zero errors at 30 dB with true CSI


def test_cli_config_file_with_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "mcs": 2, "nfb_bytes": 40, "frame": "sf", "receiver": "perfect",
        "esn0": "30", "frames": 10, "seed": 3,
    }))
    out = tmp_path / "run.csv"
    proc = run_cli(["--config", str(cfg_path), "--frames", "20",
                    "--out", str(out)])
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().splitlines()[1].split(",")[7] == "20"  # flag wins


def test_cli_bitrate_table(tmp_path):
    out = tmp_path / "rates.csv"
    proc = run_cli(["--bitrate-table", "--mcs", "2", "--mp", "8,16",
                    "--nfb-bytes", "1:200", "--out", str(out)])
    assert proc.returncode == 0, proc.stderr
    header = out.read_text().splitlines()[0]
    assert header == "n_fb_bytes,r_sf_mbps,r_mf_mbps_mp8,r_mf_mbps_mp16"


def test_cli_rejects_bad_config_key(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"not_a_flag": 1}))
    proc = run_cli(["--config", str(cfg_path)])
    assert proc.returncode != 0
