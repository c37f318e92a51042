import json

import pytest

from attriq.cli import main

from synthcorpus import build_dataset, write_beir_layout


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-synth")
    dataset = build_dataset()
    return dataset, write_beir_layout(dataset, root)


@pytest.fixture
def config_file(synth_files, tmp_path):
    _, paths = synth_files
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"data.corpus = {paths['corpus']}\n"
        f"data.queries = {paths['queries']}\n"
        f"data.qrels = {paths['qrels']}\n"
        "retriever.kind = sparse\n"
        "retriever.seed = 42\n"
        "run.concurrency = 1\n"
    )
    return cfg


def test_index_builds_snapshot(config_file, tmp_path, capsys):
    out = tmp_path / "index.json.gz"
    code = main(["--quiet", "index", "--config", str(config_file), "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert "indexed 500 documents" in capsys.readouterr().out


def test_attribute_prints_token_table(config_file, capsys):
    code = main(
        ["--quiet", "attribute", "--config", str(config_file), "--query-id", "q00"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "topic00" in out
    assert "stuff" in out
    assert "raw" in out


def test_attribute_free_text(config_file, capsys):
    code = main(
        ["--quiet", "attribute", "--config", str(config_file), "--query-text", "topic01 stuff"]
    )
    assert code == 0
    assert "topic01" in capsys.readouterr().out


def test_run_single_method_and_compare(config_file, tmp_path, capsys):
    out_dir = tmp_path / "out"
    for method in ("Org", "Tkn"):
        code = main(
            [
                "--quiet",
                "run",
                "--config",
                str(config_file),
                "--method",
                method,
                "--set",
                f"run.output_dir={out_dir}",
            ]
        )
        assert code == 0
    compare_out = tmp_path / "compare.txt"
    code = main(
        [
            "--quiet",
            "compare",
            str(out_dir / "Org" / "report.jsonl"),
            str(out_dir / "Tkn" / "report.jsonl"),
            "--out",
            str(compare_out),
        ]
    )
    assert code == 0
    assert compare_out.exists()
    assert compare_out.with_suffix(".tsv").exists()
    text = compare_out.read_text()
    assert "ndcg@10" in text and "Org" in text and "Tkn" in text


def test_retriever_flag_overrides_config(config_file, tmp_path, capsys):
    out = tmp_path / "dense-index.json"
    code = main(
        [
            "--quiet",
            "index",
            "--config",
            str(config_file),
            "--retriever",
            "dense",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    snapshot = json.loads(out.read_bytes())
    assert snapshot["kind"] == "dense"


def test_bad_config_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("retriever.kind = quantum\n")
    code = main(["--quiet", "run", "--config", str(cfg)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_method_exits_nonzero(config_file, capsys):
    code = main(["--quiet", "run", "--config", str(config_file), "--method", "Zzz"])
    assert code == 2


def test_index_refuses_bridge(config_file, tmp_path, capsys):
    code = main(
        [
            "--quiet",
            "index",
            "--config",
            str(config_file),
            "--retriever",
            "bridge",
            "--set",
            "bridge.cmd=true",
            "--out",
            str(tmp_path / "x.json"),
        ]
    )
    assert code == 2
    assert "remotely" in capsys.readouterr().err
