import json

import pytest

from pictocs import cli
from pictocs.checkpoint import load_checkpoint
from pictocs.corpus import load_corpus


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestUsage:
    def test_no_arguments_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([])
        assert exc.value.code == 2

    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["generate-corpus", "--bogus"])
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 2

    def test_operational_failure_exits_1(self, tmp_path, capsys):
        code, _, err = run(
            ["train", "--corpus", str(tmp_path / "missing.jsonl"),
             "--mode", "cs", "--out", str(tmp_path / "x.ckpt")],
            capsys,
        )
        assert code == 1
        assert "error" in err


class TestGenerateCorpus:
    def test_writes_both_files(self, tmp_path, capsys):
        train_path = tmp_path / "c.train"
        test_path = tmp_path / "c.test"
        code, out, _ = run(
            ["generate-corpus", "--train", "30", "--test", "5", "--seed", "3",
             "--out-train", str(train_path), "--out-test", str(test_path)],
            capsys,
        )
        assert code == 0
        assert len(load_corpus(train_path)) == 30
        assert len(load_corpus(test_path)) == 5

    def test_seed_reproducible(self, tmp_path, capsys):
        a = tmp_path / "a.train"
        b = tmp_path / "b.train"
        for path in (a, b):
            run(
                ["generate-corpus", "--train", "20", "--test", "0", "--seed", "9",
                 "--out-train", str(path), "--out-test", str(tmp_path / "t.test")],
                capsys,
            )
        assert a.read_bytes() == b.read_bytes()


@pytest.fixture(scope="module")
def cli_artifacts(tmp_path_factory):
    """Tiny corpus -> tiny trained model + board, via the CLI itself."""
    root = tmp_path_factory.mktemp("cli")
    argv = [
        "generate-corpus", "--train", "120", "--test", "12", "--seed", "5",
        "--out-train", str(root / "c.train"), "--out-test", str(root / "c.test"),
    ]
    assert cli.main(argv) == 0
    common = [
        "--vocab-size", "500", "--epochs", "3", "--batch-size", "32",
        "--hidden", "32", "--layers", "1", "--heads", "2", "--ff", "64",
        "--seed", "5",
    ]
    assert cli.main(
        ["train", "--corpus", str(root / "c.train"), "--mode", "cs",
         "--out", str(root / "cs.ckpt"), "--vocab-out", str(root / "cs.vocab")]
        + common
    ) == 0
    assert cli.main(
        ["train", "--corpus", str(root / "c.train"), "--mode", "flat",
         "--out", str(root / "flat.ckpt")] + common
    ) == 0
    return root


class TestPipelineCommands:
    def test_checkpoints_valid(self, cli_artifacts):
        ckpt = load_checkpoint(cli_artifacts / "cs.ckpt")
        assert ckpt.meta["mode"] == "cs"
        assert ckpt.vocab is not None
        assert (cli_artifacts / "cs.vocab").exists()

    def test_encode_board_and_predict_with_decoder(self, cli_artifacts, capsys):
        root = cli_artifacts
        code, out, _ = run(
            ["encode-board", "--model", str(root / "cs.ckpt"), "--board", "sample",
             "--out", str(root / "board.dec")],
            capsys,
        )
        assert code == 0
        code, out, _ = run(
            ["predict", "--model", str(root / "cs.ckpt"), "--board", "sample",
             "--decoder", str(root / "board.dec"),
             "--slot", "quem=eu", "--mask", "o_que", "--k", "5", "--json"],
            capsys,
        )
        assert code == 0
        items = json.loads(out)
        assert len(items) == 5

    def test_stale_decoder_fails(self, cli_artifacts, capsys):
        root = cli_artifacts
        assert cli.main(
            ["encode-board", "--model", str(root / "cs.ckpt"), "--board", "sample",
             "--out", str(root / "stale.dec")]
        ) == 0
        code, _, err = run(
            ["predict", "--model", str(root / "flat.ckpt"), "--board", "sample",
             "--decoder", str(root / "stale.dec"), "--mode", "flat",
             "--prefix", "eu comer", "--k", "3"],
            capsys,
        )
        assert code == 1
        assert "fingerprint" in err

    def test_predict_cs_paper_example(self, cli_artifacts, capsys):
        root = cli_artifacts
        code, out, _ = run(
            ["predict", "--model", str(root / "cs.ckpt"), "--board", "sample",
             "--slot", "quem=eu", "--slot", "verbo=querer comer",
             "--mask", "o_que", "--k", "12", "--json"],
            capsys,
        )
        assert code == 0
        items = json.loads(out)
        assert len(items) == 12
        assert all(set(i) == {"card_id", "caption", "prob", "role"} for i in items)

    def test_predict_flat(self, cli_artifacts, capsys):
        root = cli_artifacts
        code, out, _ = run(
            ["predict", "--model", str(root / "flat.ckpt"), "--board", "sample",
             "--mode", "flat", "--prefix", "eu comer", "--k", "4", "--json"],
            capsys,
        )
        assert code == 0
        assert len(json.loads(out)) == 4

    def test_human_readable_table(self, cli_artifacts, capsys):
        root = cli_artifacts
        code, out, _ = run(
            ["predict", "--model", str(root / "cs.ckpt"), "--board", "sample",
             "--mask", "quem", "--k", "3"],
            capsys,
        )
        assert code == 0
        lines = [l for l in out.splitlines() if l.strip()]
        assert len(lines) == 3
        assert "0." in lines[0]

    def test_eval_table_and_report(self, cli_artifacts, capsys):
        root = cli_artifacts
        report_path = root / "report.json"
        rankings_path = root / "rankings.jsonl"
        code, out, _ = run(
            ["eval", "--model-cs", str(root / "cs.ckpt"),
             "--model-flat", str(root / "flat.ckpt"),
             "--test", str(root / "c.test"), "--board", "sample",
             "--k", "1,9,18,25,36",
             "--report-json", str(report_path),
             "--dump-rankings", str(rankings_path)],
            capsys,
        )
        assert code == 0
        assert "ACC@36" in out and "Entropy@25" in out and "MRR" in out
        doc = json.loads(report_path.read_text(encoding="utf-8"))
        assert doc["k_list"] == [1, 9, 18, 25, 36]
        for row in doc["models"].values():
            accs = [row["acc"][str(k)] for k in doc["k_list"]]
            assert accs == sorted(accs)
        lines = rankings_path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == doc["models"]["cs"]["cases"]
        top = json.loads(lines[0])["top"]
        assert len(top) == 36

    def test_export_board(self, tmp_path, capsys):
        out_path = tmp_path / "exported.json"
        code, out, _ = run(["export-board", "--out", str(out_path)], capsys)
        assert code == 0
        doc = json.loads(out_path.read_text(encoding="utf-8"))
        assert len(doc["cards"]) >= 36
