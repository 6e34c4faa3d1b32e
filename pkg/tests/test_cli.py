import json

import numpy as np
import pytest

from compassqec.cli import EXIT_CONFIG, EXIT_EXPERIMENT, EXIT_OK, main
from compassqec.frames import ShotBatch
from compassqec.shotfile import ShotFile


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_code_describe(capsys):
    assert main(["code", "describe", "--d", "3", "--ell", "2", "--distance"]) == EXIT_OK
    doc = _json_out(capsys)
    assert doc["num_qubits"] == 9 and doc["distance"] == 3


def test_sample_then_decode(tmp_path, capsys):
    shots = tmp_path / "s.bin"
    dem = tmp_path / "model.dem"
    argv = ["sample", "--d", "3", "--ell", "2", "--p", "0.01", "--eta", "2", "--rounds", "2",
            "--shots", "200", "--seed", "5", "--out", str(shots), "--dem", str(dem)]
    assert main(argv) == EXIT_OK
    first = _json_out(capsys)
    assert first["shots"] == 200
    assert dem.read_text().startswith("error(")
    assert main(argv) == EXIT_OK
    assert _json_out(capsys)["sha256"] == first["sha256"]
    for decoder in ("mwpm", "corr"):
        pred = tmp_path / f"{decoder}.npy"
        assert main(["decode", str(shots), "--decoder", decoder, "--predictions", str(pred),
                     "--dot", str(tmp_path / "g.dot")]) == EXIT_OK
        row = _json_out(capsys)
        assert row["shots"] == 200 and row["decoder"] == decoder
        assert np.load(pred).shape == (200, 1)
    assert (tmp_path / "g.dot").read_text().startswith("graph matching {")


def test_code_capacity_css_decode(tmp_path, capsys):
    shots = tmp_path / "cc.bin"
    assert main(["sample", "--d", "5", "--ell", "2", "--noise", "code_capacity", "--p", "0.05",
                 "--shots", "100", "--seed", "1", "--out", str(shots)]) == EXIT_OK
    capsys.readouterr()
    assert main(["decode", str(shots), "--decoder", "css-zx"]) == EXIT_OK
    assert _json_out(capsys)["failures"] <= 100


def test_css_decoder_on_circuit_shots_is_a_config_error(tmp_path, capsys):
    shots = tmp_path / "c.bin"
    main(["sample", "--d", "3", "--ell", "2", "--p", "0.01", "--rounds", "1", "--shots", "5", "--seed", "1",
          "--out", str(shots)])
    assert main(["decode", str(shots), "--decoder", "css-xz"]) == EXIT_CONFIG


def test_threshold_with_config_file(tmp_path, capsys):
    cfg = {
        "code": {"d": [3, 5], "ell": [2], "deformation": ["css"]},
        "noise": {"model": "code_capacity", "p": [0.05, 0.15], "eta": [1.0]},
        "run": {"shots": 100, "seed": 3, "decoders": ["mwpm"], "bootstrap": 0, "plots": False},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "res"
    assert main(["threshold", "--config", str(path), "--out", str(out)]) == EXIT_OK
    assert (out / "rates.csv").exists() and (out / "manifest.json").exists()


def test_threshold_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"code": {"d": [4]}, "noise": {"model": "hbd", "p": [0.1], "eta": [1]},
                                "run": {"shots": 1, "seed": 0}}))
    assert main(["threshold", "--config", str(path), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "code.d[0]" in capsys.readouterr().err
    path.write_text("{not json")
    assert main(["threshold", "--config", str(path)]) == EXIT_CONFIG


def test_failed_experiment_exit_code(tmp_path, capsys, monkeypatch):
    import compassqec.experiment as experiment

    def boom(*_):
        raise RuntimeError("decoder crashed")

    monkeypatch.setattr(experiment, "run_cell", boom)
    out = tmp_path / "res"
    argv = ["threshold", "--d", "3", "5", "--ell", "2", "--noise", "code_capacity", "--p", "0.1",
            "--eta", "1", "--shots", "10", "--seed", "0", "--out", str(out), "--no-plots"]
    assert main(argv) == EXIT_EXPERIMENT
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed" and "decoder crashed" in manifest["error"]


def test_gap_command(tmp_path, capsys):
    out = tmp_path / "gap"
    assert main(["gap", "--d", "3", "--ell", "2", "--p", "0.02", "--eta", "1", "4", "--rounds", "2",
                 "--shots", "50", "--seed", "2", "--out", str(out), "--no-plots"]) == EXIT_OK
    summary = _json_out(capsys)
    assert [s["eta"] for s in summary] == [1.0, 4.0]
    assert all(s["negative"] == s["failures"] for s in summary)
    assert (out / "gaps.csv").exists()


def test_missing_subcommand_exits_with_usage():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_shot_file_round_trip(tmp_path, rng):
    batch = ShotBatch(rng.random((37, 13)) < 0.3, rng.random((37, 2)) < 0.5, 99)
    ShotFile(batch, {"d": 3}).save(tmp_path / "f.bin")
    back = ShotFile.load(tmp_path / "f.bin")
    assert (back.batch.detection_events == batch.detection_events).all()
    assert (back.batch.observable_flips == batch.observable_flips).all()
    assert back.spec == {"d": 3} and back.batch.seed == 99


def test_shot_file_detects_corruption(tmp_path, rng):
    batch = ShotBatch(rng.random((20, 9)) < 0.5, rng.random((20, 1)) < 0.5, 1)
    path = tmp_path / "f.bin"
    ShotFile(batch, {}).save(path)
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="checksum"):
        ShotFile.load(path)
    path.write_bytes(bytes(raw[:-1]))
    with pytest.raises(ValueError, match="length"):
        ShotFile.load(path)
    path.write_bytes(b"no header")
    with pytest.raises(ValueError):
        ShotFile.load(path)
