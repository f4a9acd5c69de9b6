import numpy as np
import pytest

from fopa import cli
from fopa.scene.netpbm import read_image
from fopa.training import NumericError


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert cli.run(["gen-data", "--seed", "7", "--out", str(data), "--n-bg", "3", "--n-fg", "3", "--scales", "1"]) == 0
    common = ["--data", str(data), "--epochs", "1", "--batch-size", "8"]
    assert cli.run(["train-sopa", *common, "--out", str(root / "sopa")]) == 0
    assert cli.run(["train-fopa", *common, "--sopa", str(root / "sopa" / "sopa.ckpt"), "--out", str(root / "fopa")]) == 0
    return root


def first_pair(data):
    return (data / "train.csv").read_text().splitlines()[1].split(",")[0]


class TestExitCodes:
    def test_help(self, capsys):
        assert cli.run(["--help"]) == 0

    def test_unknown_flag_is_usage(self):
        assert cli.run(["gen-data", "--bogus"]) == 1

    def test_missing_subcommand_is_usage(self):
        assert cli.run([]) == 1

    def test_missing_data_is_data_error(self, tmp_path):
        assert cli.run(["eval", "--model", str(tmp_path / "none.ckpt"), "--data", str(tmp_path)]) == 2

    def test_fopa_without_sopa_is_usage(self, workspace, tmp_path):
        assert cli.run(["train-fopa", "--data", str(workspace / "data"), "--out", str(tmp_path)]) == 1

    def test_numeric_failure(self, workspace, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise NumericError("loss is nan")

        monkeypatch.setattr(cli, "train_sopa", boom)
        assert cli.run(["train-sopa", "--data", str(workspace / "data"), "--out", str(tmp_path)]) == 3

    def test_compose_needs_location(self, workspace, tmp_path):
        data = workspace / "data"
        assert cli.run(["compose", "--data", str(data), "--pair", first_pair(data), "--out", str(tmp_path)]) == 1

    def test_unknown_pair_is_data_error(self, workspace, tmp_path):
        args = ["compose", "--data", str(workspace / "data"), "--pair", "nope", "--x", "1", "--y", "1", "--out", str(tmp_path)]
        assert cli.run(args) == 2


class TestCommands:
    def test_gen_data_deterministic(self, workspace, tmp_path):
        assert cli.run(["gen-data", "--seed", "7", "--out", str(tmp_path), "--n-bg", "3", "--n-fg", "3", "--scales", "1"]) == 0
        a = workspace / "data"
        # run.cfg records the output path, which differs by construction
        for f in sorted(p for p in a.rglob("*") if p.is_file() and p.name != "run.cfg"):
            assert f.read_bytes() == (tmp_path / f.relative_to(a)).read_bytes(), f

    def test_train_log_columns(self, workspace):
        lines = (workspace / "fopa" / "train.log").read_text().splitlines()
        assert lines[0].split("\t")[:3] == ["epoch", "lr", "L_bce"] and len(lines) == 2

    def test_eval_table(self, workspace, capsys):
        assert cli.run(["eval", "--model", str(workspace / "fopa" / "fopa.ckpt"), "--data", str(workspace / "data")]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "Method\tF1\tbAcc" and out[1].startswith("FOPA\t")

    def test_heatmap_and_pick_agree(self, workspace, tmp_path, capsys):
        data = workspace / "data"
        pair = first_pair(data)
        model = str(workspace / "fopa" / "fopa.ckpt")
        assert cli.run(["heatmap", "--model", model, "--data", str(data), "--pair", pair, "--out", str(tmp_path / "h")]) == 0
        best_line = capsys.readouterr().out.splitlines()[0].split("\t")
        pgm = read_image(tmp_path / "h" / "heatmap.pgm")
        scores = np.load(tmp_path / "h" / "scores.npy")
        assert pgm.shape == (64, 64) and (tmp_path / "h" / "heatmap.png").exists()
        bx, by = int(best_line[1]), int(best_line[2])
        # quantisation can tie several pixels, so compare against the max grey level
        assert pgm[by, bx] == pgm.max() and scores[by, bx] == scores.max()
        assert cli.run(["compose", "--data", str(data), "--pair", pair, "--pick", "best", "--model", model, "--out", str(tmp_path / "c")]) == 0
        assert capsys.readouterr().out.strip() == f"location\t{bx}\t{by}"
        assert read_image(tmp_path / "c" / "composite.ppm").shape == (64, 64, 3)

    def test_compose_at_location(self, workspace, tmp_path):
        data = workspace / "data"
        args = ["compose", "--data", str(data), "--pair", first_pair(data), "--x", "30", "--y", "50", "--out", str(tmp_path)]
        assert cli.run(args) == 0
        assert read_image(tmp_path / "composite_mask.pgm").max() == 255

    @pytest.mark.parametrize("bins", ["8", "32"])
    def test_onehot_training(self, workspace, tmp_path, bins):
        args = ["train-fopa", "--data", str(workspace / "data"), "--epochs", "1", "--sopa", str(workspace / "sopa" / "sopa.ckpt")]
        assert cli.run([*args, "--onehot-bins", bins, "--out", str(tmp_path)]) == 0
        assert (tmp_path / "fopa.ckpt").exists()

    def test_bench_writes_reports(self, workspace, tmp_path, capsys):
        args = [
            "bench", "--sopa", str(workspace / "sopa" / "sopa.ckpt"), "--fopa", str(workspace / "fopa" / "fopa.ckpt"),
            "--data", str(workspace / "data"), "--reps", "10", "--warmup", "1", "--skip-enumeration", "--no-scores",
            "--out", str(tmp_path),
        ]
        assert cli.run(args) == 0
        for name in ("bench.tsv", "bench.kv", "bench.png", "run.cfg"):
            assert (tmp_path / name).exists()

    def test_run_cfg_records_flags(self, workspace):
        cfg = (workspace / "fopa" / "run.cfg").read_text()
        assert "lam=16.0" in cfg and "fusion=dynamic" in cfg
