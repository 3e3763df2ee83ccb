import json
import os

import numpy as np
import pytest

from hteforest.cli import main


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def write_scores_csv(path):
    lines = ["gamma,rule,ruleb"]
    g = [4.0, 2.0, 0.0, -2.0]
    r = [4.0, 3.0, 2.0, 1.0]
    rb = [1.0, 2.0, 3.0, 4.0]
    for a, b, c in zip(g, r, rb):
        lines.append(f"{a},{b},{c}")
    path.write_text("\n".join(lines) + "\n")


def write_seven_row_csv(path):
    lines = ["x1,w,y"]
    for x, w, y in [
        (1, 1, 1), (2, 1, 0), (3, 1, 1), (4, 1, 1),
        (5, 0, 0), (6, 0, 0), (7, 0, 1),
    ]:
        lines.append(f"{x},{w},{y}")
    path.write_text("\n".join(lines) + "\n")


class TestSimulate:
    def test_writes_csv_with_expected_columns(self, tmp_path, capsys):
        code = main([
            "simulate", "--scenario", "rct", "--n", "500", "--p", "5",
            "--seed", "7", "--out", str(tmp_path),
        ])
        assert code == 0
        header = (tmp_path / "simulated.csv").read_text().splitlines()[0]
        assert header == "x1,x2,x3,x4,x5,w,y"
        truth = json.loads((tmp_path / "truth.json").read_text())
        assert len(truth["true_tau"]) == 500


class TestAte:
    def test_diff_means_seven_rows(self, tmp_path, capsys):
        csv_path = tmp_path / "d.csv"
        write_seven_row_csv(csv_path)
        code = main(["ate", "--input", str(csv_path), "--method", "diff-means"])
        assert code == 0
        out = capsys.readouterr().out
        assert "estimate: 0.41667" in out

    def test_missing_column_runtime_error(self, tmp_path, capsys):
        csv_path = tmp_path / "d.csv"
        write_seven_row_csv(csv_path)
        code = main([
            "ate", "--input", str(csv_path), "--method", "diff-means",
            "--treatment-col", "nosuch",
        ])
        assert code == 1
        record = json.loads(capsys.readouterr().err)
        assert record["error"] == "ValidationError"
        assert "nosuch" in record["message"]


class TestEvaluate:
    def test_toc_envelope(self, tmp_path, capsys):
        scores = tmp_path / "scores.csv"
        write_scores_csv(scores)
        out = tmp_path / "out"
        code = main([
            "evaluate", "toc", "--scores", str(scores),
            "--bootstrap-B", "20", "--out", str(out),
        ])
        assert code == 0
        env = json.loads((out / "toc.json").read_text())
        assert env["summary"] == 1.5
        assert "AUTOC: 1.50000" in capsys.readouterr().out

    def test_qini_files(self, tmp_path, capsys):
        scores = tmp_path / "scores.csv"
        write_scores_csv(scores)
        out = tmp_path / "out"
        code = main([
            "evaluate", "qini", "--scores", str(scores),
            "--bootstrap-B", "20", "--out", str(out),
        ])
        assert code == 0
        body = (out / "qini.csv").read_text().splitlines()
        assert body[0] == "grid,value,se,baseline"
        assert len(body) == 5

    def test_autoc_diff_requires_second_rule(self, tmp_path, capsys):
        scores = tmp_path / "scores.csv"
        write_scores_csv(scores)
        code = main([
            "evaluate", "autoc-diff", "--scores", str(scores),
            "--out", str(tmp_path / "o"),
        ])
        assert code == 1
        assert "rule-col-b" in json.loads(capsys.readouterr().err)["message"]

    def test_unknown_subcommand_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestBlp:
    def test_blp_outputs(self, tmp_path, capsys):
        scores = tmp_path / "scores.csv"
        rng = np.random.default_rng(56)
        g = rng.normal(size=20)
        z = rng.normal(size=20)
        lines = ["gamma,z1"] + [
            f"{float(a)!r},{float(b)!r}" for a, b in zip(g, z)
        ]
        scores.write_text("\n".join(lines) + "\n")
        out = tmp_path / "out"
        code = main([
            "blp", "--scores", str(scores), "--gamma-col", "gamma",
            "--modifiers", "z1", "--out", str(out),
        ])
        assert code == 0
        doc = json.loads((out / "blp.json").read_text())
        names = [r["name"] for r in doc["blp"]["rows"]]
        assert names == ["(intercept)", "z1"]
        assert doc["correlations"]["matrix"][0][0] == 1.0


class TestFitPredict:
    def test_roundtrip(self, tmp_path, capsys):
        data_dir = tmp_path / "data"
        main([
            "simulate", "--scenario", "rct", "--n", "200", "--p", "3",
            "--seed", "3", "--out", str(data_dir),
        ])
        csv_path = str(data_dir / "simulated.csv")
        model_dir = tmp_path / "model"
        code = main([
            "fit", "--input", csv_path, "--num-trees", "30",
            "--known-propensity", "0.5", "--out", str(model_dir),
        ])
        assert code == 0
        pred_dir = tmp_path / "pred"
        code = main([
            "predict", "--model", str(model_dir / "model.json"),
            "--input", csv_path, "--out", str(pred_dir),
        ])
        assert code == 0
        body = (pred_dir / "predictions.csv").read_text().splitlines()
        assert body[0] == "row,cate"
        assert len(body) == 201


class TestImportance:
    def test_planted_signal_ranks_first(self, tmp_path, capsys):
        rng = np.random.default_rng(57)
        n = 300
        x = rng.uniform(size=(n, 3))
        w = (rng.uniform(size=n) < 0.5).astype(int)
        y = 5.0 * x[:, 1] + rng.normal(0, 0.1, n)
        lines = ["a,b,c,w,y"]
        for i in range(n):
            lines.append(
                f"{float(x[i, 0])!r},{float(x[i, 1])!r},{float(x[i, 2])!r},"
                f"{int(w[i])},{float(y[i])!r}"
            )
        csv_path = tmp_path / "d.csv"
        csv_path.write_text("\n".join(lines) + "\n")
        out = tmp_path / "out"
        code = main([
            "importance", "--input", str(csv_path), "--num-trees", "40",
            "--out", str(out),
        ])
        assert code == 0
        doc = json.loads((out / "importance.json").read_text())
        shares = dict(zip(doc["feature_names"], doc["shares"]))
        assert shares["b"] == max(doc["shares"])


RUN_ARGS = [
    "run", "--scenario", "rct", "--n", "200", "--p", "4",
    "--num-trees", "40", "--bootstrap-B", "20", "--seed", "5",
]

RESULT_FILES = (
    "overlap.json", "ate.json", "quartile_ates.json", "cate_test.csv",
    "toc_cate.csv", "toc_risk.csv", "qini.csv", "evaluation.json", "blp.json",
)


class TestRun:
    def test_outputs_and_determinism(self, tmp_path, capsys):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert main(RUN_ARGS + ["--out", str(a)]) == 0
        assert main(RUN_ARGS + ["--out", str(b)]) == 0
        for name in RESULT_FILES:
            assert (a / name).exists()
            assert read(a / name) == read(b / name), name
        assert (a / "manifest.json").exists()

    def test_manifest_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "a"
        assert main(RUN_ARGS + ["--out", str(out)]) == 0
        before = {name: read(out / name) for name in RESULT_FILES}
        code = main(["run", "--from-manifest", str(out / "manifest.json"),
                     "--out", str(out)])
        assert code == 0
        for name in RESULT_FILES:
            assert read(out / name) == before[name], name

    def test_thread_invariance(self, tmp_path, capsys):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert main(RUN_ARGS + ["--out", str(a), "--threads", "1"]) == 0
        assert main(RUN_ARGS + ["--out", str(b), "--threads", "4"]) == 0
        for name in RESULT_FILES:
            assert read(a / name) == read(b / name), name

    def test_known_propensity_single_bin(self, tmp_path, capsys):
        out = tmp_path / "a"
        code = main(RUN_ARGS + ["--known-propensity", "0.5", "--out", str(out)])
        assert code == 0
        overlap = json.loads((out / "overlap.json").read_text())
        for part in ("train", "test"):
            counts = overlap[part]["bin_counts"]
            occupied = [i for i, c in enumerate(counts) if c > 0]
            assert occupied == [10]

    def test_requires_exactly_one_source(self, tmp_path, capsys):
        code = main(["run", "--out", str(tmp_path / "x")])
        assert code == 1
        assert "input" in json.loads(capsys.readouterr().err)["message"]
