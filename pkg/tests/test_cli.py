import json

import pytest

from spectrumqa.cli import EXIT_DATA, EXIT_OK, EXIT_QC, EXIT_USAGE, main


@pytest.fixture(scope="module")
def cli_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("clids")
    code = main(
        [
            "generate",
            "--out", str(out),
            "--seed", "21",
            "--count", "9",
            "--workers", "1",
        ]
    )
    assert code == EXIT_OK
    return out


def test_generate_writes_dataset(cli_dataset):
    manifest = json.loads((cli_dataset / "manifest.json").read_text())
    assert len(manifest["samples"]) == 9
    assert manifest["qa"]["pair_count"] == 90
    assert {e["scenario"] for e in manifest["samples"].values()} == {"A", "B", "C"}


def test_generate_requires_seed(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["generate", "--out", str(tmp_path)])
    assert err.value.code == EXIT_USAGE


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == EXIT_USAGE


def test_score_oracle_predictions(cli_dataset, tmp_path, capsys):
    from spectrumqa.scoring import GoldStore, PredictionRecord, write_predictions

    gold = GoldStore(cli_dataset)
    records = [
        PredictionRecord(sid, "L1", "oracle", gold.gold_payload(sid, "L1"))
        for sid in gold.sample_order
    ]
    preds = tmp_path / "oracle.jsonl"
    write_predictions(records, preds)
    code = main(["score", "--predictions", str(preds), "--dataset", str(cli_dataset)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "L1: 1.0000" in out
    assert "L3: absent" in out
    report = json.loads(preds.with_suffix(".scores.json").read_text())
    assert report["scores"]["L1"] == 1.0


def test_score_unknown_sample_exits_data_error(cli_dataset, tmp_path, capsys):
    preds = tmp_path / "bad.jsonl"
    preds.write_text(
        json.dumps(
            {"sample_id": "Q12345", "level": "L1", "model_id": "m", "payload": "low"}
        )
        + "\n"
    )
    code = main(["score", "--predictions", str(preds), "--dataset", str(cli_dataset)])
    assert code == EXIT_DATA
    assert "Q12345" in capsys.readouterr().err


def test_score_missing_file_exits_data_error(cli_dataset, capsys):
    code = main(
        ["score", "--predictions", "/nonexistent/p.jsonl", "--dataset", str(cli_dataset)]
    )
    assert code == EXIT_DATA


def test_score_malformed_line_reports_line_number(cli_dataset, tmp_path, capsys):
    preds = tmp_path / "mangled.jsonl"
    preds.write_text("this is not json\n")
    code = main(["score", "--predictions", str(preds), "--dataset", str(cli_dataset)])
    assert code == EXIT_DATA
    assert ":1:" in capsys.readouterr().err


def test_composite_default_table(capsys):
    code = main(["composite"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "0.443" in out and "0.381" in out and "0.407" in out and "0.616" in out
    assert "+39.0%" in out


def test_composite_custom_weights_rejected_when_invalid(capsys):
    code = main(["composite", "--weights", "0.5,0.5,0.5,0.5"])
    assert code == EXIT_USAGE


def test_composite_equal_scheme(capsys):
    code = main(["composite", "--scheme", "equal"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "0.485" in out  # recomputed, not copied from any published figure
    assert "recomputed" in out


def test_composite_custom_routing(capsys):
    code = main(["composite", "--routing", "L1=vlm,L2=cnn,L3=cnn,L4=cnn"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "custom" in out
    # 0.2*0.006 + 0.2*0.657 + 0.3*0.552 + 0.3*0 = 0.2982
    assert "0.298" in out


def test_composite_custom_routing_l1_to_vlm(capsys):
    # hand value: 0.2*0.006 + 0.2*0.657 + 0.3*0.552 + 0.3*0.576 = 0.471
    code = main(["composite", "--routing", "L1=vlm,L2=cnn,L3=cnn,L4=vlm"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "0.471" in out


def test_composite_scores_file_generic_models(tmp_path, capsys):
    scores = {"alpha": {"L1": 1.0, "L2": 1.0, "L3": 1.0, "L4": 1.0},
              "beta": {"L1": 0.0, "L2": 0.5, "L3": 0.0, "L4": 0.0}}
    path = tmp_path / "scores.json"
    path.write_text(json.dumps(scores))
    code = main(["composite", "--scores", str(path)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "alpha-only" in out and "beta-only" in out
    assert "1.000" in out
    # a baseline that names no configuration is a usage error
    code = main(["composite", "--scores", str(path), "--baseline", "all-alpha"])
    assert code == EXIT_USAGE


def test_render_standalone(tmp_path):
    target = tmp_path / "map.png"
    code = main(["render", "--scenario", "B", "--seed", "4", "--index", "2",
                 "--out", str(target)])
    assert code == EXIT_OK
    from PIL import Image

    assert Image.open(target).size == (448, 448)


def test_render_from_dataset(cli_dataset, tmp_path):
    manifest = json.loads((cli_dataset / "manifest.json").read_text())
    sid = manifest["sample_order"][0]
    target = tmp_path / "re.png"
    code = main(["render", "--dataset", str(cli_dataset), "--sample", sid,
                 "--out", str(target)])
    assert code == EXIT_OK
    # re-render reproduces the stored heatmap byte-for-byte
    stored = cli_dataset / manifest["samples"][sid]["image"]
    assert target.read_bytes() == stored.read_bytes()


def test_synth_predict_roundtrip(cli_dataset, tmp_path, capsys):
    preds = tmp_path / "synth.jsonl"
    code = main(["synth-predict", "--dataset", str(cli_dataset), "--level", "L2",
                 "--error-rate", "0", "--seed", "5", "--out", str(preds)])
    assert code == EXIT_OK
    code = main(["score", "--predictions", str(preds), "--dataset", str(cli_dataset)])
    assert code == EXIT_OK
    assert "L2: 1.0000" in capsys.readouterr().out


def test_qa_command_regenerates(cli_dataset, tmp_path, capsys):
    target = tmp_path / "qa2.jsonl"
    code = main(["qa", "--dataset", str(cli_dataset), "--out", str(target)])
    assert code == EXIT_OK
    assert target.read_bytes() == (cli_dataset / "qa_pairs.jsonl").read_bytes()


def test_qc_failure_exits_three(tmp_path, monkeypatch, capsys):
    from spectrumqa.qa import QCError

    def boom(config, out_dir):
        raise QCError("injected failure")

    monkeypatch.setattr("spectrumqa.cli.build_dataset", boom)
    code = main(["generate", "--out", str(tmp_path), "--seed", "1", "--count", "3"])
    assert code == EXIT_QC
    assert "QC failure" in capsys.readouterr().err


def test_generate_unwritable_output_exits_data_error(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    code = main(["generate", "--out", str(blocker / "nested"), "--seed", "1",
                 "--count", "2", "--workers", "1", "--no-images"])
    assert code == EXIT_DATA


def test_generate_rerun_is_idempotent(tmp_path):
    args = ["generate", "--out", str(tmp_path / "d"), "--seed", "33", "--count", "6",
            "--workers", "1", "--no-images"]
    assert main(args) == EXIT_OK
    manifest_one = (tmp_path / "d" / "manifest.json").read_bytes()
    assert main(args) == EXIT_OK
    assert (tmp_path / "d" / "manifest.json").read_bytes() == manifest_one


def test_generate_with_scenario_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenarios": {"A": {"n_base_stations": 2}}}))
    out = tmp_path / "ds"
    code = main(["generate", "--out", str(out), "--seed", "3", "--counts", "A=2",
                 "--config", str(cfg), "--workers", "1", "--no-images"])
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    record = json.loads((out / manifest["samples"]["A00000"]["metadata"]).read_text())
    assert len(record["transmitter_set"]["transmitters"]) == 12  # 10 sats + 2 BS
