"""End-to-end checks for the command line interface.

Every test drives sarcd.cli.main in-process with an argv list and asserts
on return codes and the artifacts left behind; nothing shells out.  Error
paths pin the exit code contract: 2 usage, 3 data, 4 numeric.
"""

import json

import numpy as np
import pytest

from sarcd.cli import main
from sarcd.types import read_confidence, read_rdm


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    """One small noisy scene shared read-only by the chain tests."""
    out = tmp_path_factory.mktemp("scene") / "s"
    rc = main([
        "synth", "--out", str(out), "--seed", "3",
        "--radar-points", "40", "--noise-sigma", "0.5", "--outlier-frac", "0.2",
    ])
    assert rc == 0
    return out


def test_synth_writes_scene_directory(tmp_path):
    out = tmp_path / "scene"
    assert main(["synth", "--out", str(out), "--seed", "1", "--frames", "2"]) == 0
    for name in ("truth.rdm", "mono.rdm", "radar.rdm", "radar_truth.rdm",
                 "box_id.npy", "image.png", "camera.json", "meta.json"):
        assert (out / name).exists(), name
    # one csv/pose pair per lidar frame
    assert len(list(out.glob("lidar_*.csv"))) == 2
    assert len(list(out.glob("pose_*.txt"))) == 2


def test_chain_round_trip(scene_dir, tmp_path):
    """synth output flows through every stage command without manual glue."""
    ddr = tmp_path / "ddr.rdm"
    dacc = tmp_path / "dacc.rdm"
    dint = tmp_path / "dint.rdm"
    conf = tmp_path / "conf.npz"
    dfr = tmp_path / "dfr.rdm"

    assert main(["dilate", "--mono", str(scene_dir / "mono.rdm"),
                 "--radar", str(scene_dir / "radar.rdm"), "--out", str(ddr)]) == 0
    assert main(["accumulate", "--scene", str(scene_dir), "--out", str(dacc)]) == 0
    assert main(["interp", "--in", str(dacc), "--out", str(dint)]) == 0
    assert main(["conf-gt", "--ddr", str(ddr), "--dint", str(dint),
                 "--out", str(conf)]) == 0
    assert main(["filter", "--ddr", str(ddr), "--conf", str(conf),
                 "--out", str(dfr)]) == 0
    assert main(["evaluate", "--pred", str(dfr),
                 "--gt", str(scene_dir / "truth.rdm")]) == 0

    # filtering only removes pixels, never adds them
    n_ddr = read_rdm(ddr).n_valid()
    n_dfr = read_rdm(dfr).n_valid()
    assert 0 < n_dfr < n_ddr

    cm = read_confidence(conf)
    assert cm.values.shape == read_rdm(ddr).values.shape
    assert np.all(cm.values[~cm.validity] == 0.0)


def test_dilate_report_is_deterministic(scene_dir, tmp_path):
    """Reports carry counters only; timings stay on stdout so bytes repeat."""
    args = ["dilate", "--mono", str(scene_dir / "mono.rdm"),
            "--radar", str(scene_dir / "radar.rdm")]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(tmp_path / "a.rdm"), "--report", str(a)]) == 0
    assert main(args + ["--out", str(tmp_path / "b.rdm"), "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()

    payload = json.loads(a.read_text())
    assert set(payload) == {"n_grown", "n_skipped", "n_contested", "n_valid"}
    assert all(isinstance(v, int) for v in payload.values())


def test_conf_gt_archive_bytes_repeat(scene_dir, tmp_path):
    ddr = tmp_path / "ddr.rdm"
    dint = tmp_path / "dint.rdm"
    assert main(["dilate", "--mono", str(scene_dir / "mono.rdm"),
                 "--radar", str(scene_dir / "radar.rdm"), "--out", str(ddr)]) == 0
    assert main(["accumulate", "--scene", str(scene_dir),
                 "--out", str(tmp_path / "dacc.rdm")]) == 0
    assert main(["interp", "--in", str(tmp_path / "dacc.rdm"),
                 "--out", str(dint)]) == 0
    a, b = tmp_path / "a.npz", tmp_path / "b.npz"
    for path in (a, b):
        assert main(["conf-gt", "--ddr", str(ddr), "--dint", str(dint),
                     "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_accumulate_frame_window(scene_dir, tmp_path):
    full = tmp_path / "full.rdm"
    one = tmp_path / "one.rdm"
    assert main(["accumulate", "--scene", str(scene_dir), "--out", str(full)]) == 0
    assert main(["accumulate", "--scene", str(scene_dir), "--out", str(one),
                 "--frames", "1"]) == 0
    # a single sweep covers strictly less than the merged window
    assert read_rdm(one).n_valid() < read_rdm(full).n_valid()
    assert main(["accumulate", "--scene", str(scene_dir),
                 "--out", str(tmp_path / "x.rdm"), "--frames", "0"]) == 2


def test_toy_train_history_then_infer(scene_dir, tmp_path):
    weights = tmp_path / "msg.srw"
    hist = tmp_path / "hist.json"
    pred = tmp_path / "pred.rdm"
    assert main(["toy-train", "--scene", str(scene_dir), "--kind", "msgnet",
                 "--steps", "8", "--out", str(weights),
                 "--history", str(hist)]) == 0
    losses = json.loads(hist.read_text())["loss"]
    # one entry per step plus the final evaluation
    assert len(losses) == 9
    assert losses[-1] < losses[0]

    assert main(["infer", "--scene", str(scene_dir), "--weights", str(weights),
                 "--out", str(pred)]) == 0
    out = read_rdm(pred)
    truth = read_rdm(scene_dir / "truth.rdm")
    assert out.values.shape == truth.values.shape
    assert np.all(np.isfinite(out.values))


def test_infer_with_rcanet_weights_writes_confidence(tmp_path):
    scene = tmp_path / "s"
    weights = tmp_path / "rca.srw"
    conf = tmp_path / "conf.npz"
    assert main(["synth", "--out", str(scene), "--seed", "5",
                 "--width", "32", "--height", "32"]) == 0
    assert main(["toy-train", "--scene", str(scene), "--kind", "rcanet",
                 "--steps", "2", "--out", str(weights)]) == 0
    assert main(["infer", "--scene", str(scene), "--weights", str(weights),
                 "--out", str(conf)]) == 0
    cm = read_confidence(conf)
    assert cm.validity.any()
    vals = cm.values[cm.validity]
    assert np.all((vals > 0.0) & (vals < 1.0))


def test_evaluate_report_buckets(scene_dir, tmp_path):
    report = tmp_path / "eval.json"
    assert main(["evaluate", "--pred", str(scene_dir / "mono.rdm"),
                 "--gt", str(scene_dir / "truth.rdm"),
                 "--ranges", "50", "70", "80", "--report", str(report)]) == 0
    payload = json.loads(report.read_text())
    assert set(payload) == {"0-50m", "0-70m", "0-80m"}
    for row in payload.values():
        assert set(row) == {"mae_mm", "rmse_mm", "n_pixels"}
        assert row["rmse_mm"] >= row["mae_mm"]


def test_pipeline_untrained_returns_mono(tmp_path):
    """steps=0 keeps the zero-initialized net, so the prediction is mono."""
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scene": {"seed": 7}, "train": {"steps": 0}}))
    work = tmp_path / "run"
    assert main(["pipeline", "--config", str(cfg), "--workdir", str(work)]) == 0

    pred = (work / "pred.rdm").read_bytes()
    mono = (work / "scene" / "mono.rdm").read_bytes()
    assert pred == mono

    report = json.loads((work / "report.json").read_text())
    assert report["metrics"]["prediction"] == report["metrics"]["mono_baseline"]


def test_pipeline_runs_are_byte_identical(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "scene": {"seed": 7, "radar_points": 40,
                  "radar_noise_sigma": 0.5, "radar_outlier_frac": 0.2},
        "train": {"steps": 4},
    }))
    runs = []
    for name in ("one", "two"):
        work = tmp_path / name
        assert main(["pipeline", "--config", str(cfg),
                     "--workdir", str(work)]) == 0
        runs.append(work)
    for rel in ("report.json", "pred.rdm", "dfr.rdm", "conf.npz",
                "msgnet.srw", "history.json", "scene/mono.rdm"):
        assert (runs[0] / rel).read_bytes() == (runs[1] / rel).read_bytes(), rel


def test_pipeline_learned_confidence_path(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "scene": {"seed": 2, "width": 32, "height": 32},
        "confidence": "rcanet",
        "train": {"steps": 2, "rcanet_steps": 2},
    }))
    work = tmp_path / "run"
    assert main(["pipeline", "--config", str(cfg), "--workdir", str(work)]) == 0
    assert (work / "conf.npz").exists()
    report = json.loads((work / "report.json").read_text())
    assert report["confidence"]["mode"] == "rcanet"
    assert report["confidence"]["rcanet_loss_last"] is not None


def test_bench_small_sizes_agree(capsys):
    assert main(["bench", "--width", "96", "--height", "64", "--points", "12",
                 "--repeats", "2"]) == 0
    out = capsys.readouterr().out
    assert "median" in out


def test_plot_svg_bytes_repeat(scene_dir, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for path in (a, b):
        assert main(["plot", "--scene", str(scene_dir), "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"<svg" in a.read_bytes()[:2000]


def test_plot_without_inputs_is_usage_error(tmp_path):
    assert main(["plot", "--out", str(tmp_path / "x.svg")]) == 2


def test_missing_input_file_is_data_error(tmp_path):
    assert main(["evaluate", "--pred", str(tmp_path / "nope.rdm"),
                 "--gt", str(tmp_path / "nope.rdm")]) == 3


def test_corrupt_rdm_is_data_error(tmp_path, scene_dir):
    bad = tmp_path / "bad.rdm"
    bad.write_bytes(b"garbage")
    assert main(["evaluate", "--pred", str(bad),
                 "--gt", str(scene_dir / "truth.rdm")]) == 3


def test_malformed_pipeline_config_is_data_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["pipeline", "--config", str(cfg),
                 "--workdir", str(tmp_path / "w")]) == 3


def test_interp_with_too_few_nodes_is_numeric_error(tmp_path):
    from sarcd.types import DepthMap, write_rdm
    vals = np.zeros((8, 8), dtype=np.float32)
    vals[2, 2] = 5.0
    vals[5, 6] = 7.0
    src = tmp_path / "two.rdm"
    write_rdm(src, DepthMap(vals))
    assert main(["interp", "--in", str(src),
                 "--out", str(tmp_path / "out.rdm")]) == 4


def test_invalid_spec_value_is_usage_error(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "s"), "--width", "-5"]) == 2


def test_unknown_choice_exits_via_argparse(scene_dir, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["dilate", "--mono", str(scene_dir / "mono.rdm"),
              "--radar", str(scene_dir / "radar.rdm"),
              "--out", str(tmp_path / "x.rdm"), "--connectivity", "6"])
    assert exc.value.code == 2


def test_bad_thread_env_is_usage_error(scene_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("SARCD_THREADS", "abc")
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "--pred", str(scene_dir / "mono.rdm"),
              "--gt", str(scene_dir / "truth.rdm")])
    assert exc.value.code == 2


def test_thread_env_accepted_and_reported(scene_dir, monkeypatch, capsys):
    monkeypatch.setenv("SARCD_THREADS", "3")
    assert main(["evaluate", "--pred", str(scene_dir / "mono.rdm"),
                 "--gt", str(scene_dir / "truth.rdm")]) == 0
    assert "threads: 3" in capsys.readouterr().out
