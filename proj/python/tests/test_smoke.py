import json
import os
import subprocess

import pytest

import opclass


def test_parse_and_ngrams():
    tokens = opclass.parse_opcode_text("mov\r\n\n  push \nrep movsb\n")
    assert tokens == ["MOV", "PUSH", "REP_MOVSB"]
    assert opclass.pad_tokens(tokens, 2) == ["MOV", "PUSH", "REP_MOVSB", "PAD"]
    assert opclass.generate_ngrams(tokens, 2) == ["MOV PUSH", "REP_MOVSB PAD"]
    assert opclass.generate_ngrams(tokens, 2, sliding=True) == ["MOV PUSH", "PUSH REP_MOVSB"]


def test_featurize_sums_to_one():
    tokens = ["A", "B", "A", "C"]
    values = opclass.featurize(tokens, ["A", "B", "C"], 1)
    assert values == [0.5, 0.25, 0.25]
    assert sum(values) == pytest.approx(1.0, abs=1e-12)


def test_metrics_and_percentile():
    m = opclass.evaluate([0, 1, 1, 2], [0, 0, 1, 2], 3)
    assert m["accuracy"] == 0.75
    assert m["confusion_matrix"] == [[1, 1, 0], [0, 1, 0], [0, 0, 1]]
    assert opclass.percentile([1.0, 2.0, 3.0, 4.0], 50) == 2.5
    with pytest.raises(ValueError):
        opclass.evaluate([0], [0, 1], 2)


def test_dedup(tmp_path):
    for group in ("A", "B"):
        path = tmp_path / "src" / group / "Shared"
        path.mkdir(parents=True)
        (path / "f.exe.opcode").write_text("MOV\n")
    report = opclass.dedup_one_to_one(tmp_path / "src", tmp_path / "dst")
    assert report["files_before"] == 2
    assert report["files_after"] == 1
    assert report["removed"] == ["B/Shared"]
    with pytest.raises(ValueError):
        opclass.dedup_one_to_one(tmp_path / "src", tmp_path / "dst")


def test_run_cli_in_process():
    code, out, _ = opclass.run_cli(["--help"])
    assert code == 0
    assert "run-all" in out
    code, _, _ = opclass.run_cli(["no-such-command"])
    assert code == 1


@pytest.mark.skipif("OPCLASS_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_binary(tmp_path):
    group = tmp_path / "corpus" / "G1" / "Soft"
    group.mkdir(parents=True)
    (group / "a.exe.opcode").write_text("MOV\nPUSH\nMOV\n")
    (group / "b.dll.opcode").write_text("POP\nRET\n")
    out_dir = tmp_path / "ngram"
    proc = subprocess.run(
        [os.environ["OPCLASS_CLI"], "preprocess", "--opcodes", str(tmp_path / "corpus"),
         "--output", str(out_dir), "-n", "1", "--percentiles", "0"],
        capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    header = (out_dir / "1gram_p0.csv").read_text().splitlines()[0]
    assert header.startswith("group,name,type,file_name")
