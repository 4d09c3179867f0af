"""Bridge CLI: exit codes and file outputs."""

import json

import numpy as np
from PIL import Image

from embridge.cli import main_export_embeddings, main_export_pairs

from matchdodge import read_embedding_set


def build_corpus(root, identities=2):
    rng = np.random.default_rng(3)
    for i in range(identities):
        d = root / f"p{i}"
        d.mkdir(parents=True)
        arr = rng.integers(0, 255, (48, 48, 3), dtype=np.uint8)
        Image.fromarray(arr).save(d / "img0.png")


def test_export_embeddings_cli(tmp_path, capsys):
    build_corpus(tmp_path / "corpus")
    out = tmp_path / "e.emb"
    assert main_export_embeddings(["--images", str(tmp_path / "corpus"),
                                   "--out", str(out), "--image-size", "32",
                                   "--embed-dim", "16"]) == 0
    assert len(read_embedding_set(out)) == 2
    assert "exported 2 embeddings" in capsys.readouterr().out


def test_export_embeddings_missing_dir_exits_3(tmp_path, capsys):
    assert main_export_embeddings(["--images", str(tmp_path / "nope"),
                                   "--out", str(tmp_path / "e.emb")]) == 3


def test_export_embeddings_unknown_flag_exits_2(tmp_path, capsys):
    assert main_export_embeddings(["--images", "x", "--out", "y",
                                   "--bogus"]) == 2


def test_export_pairs_cli(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"match": [["a", "b"]],
                                "mismatch": [["a", "c"]]}))
    out = tmp_path / "pairs.csv"
    assert main_export_pairs(["--spec", str(spec), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


def test_export_pairs_unresolved_exits_2(tmp_path, capsys):
    build_corpus(tmp_path / "corpus")
    emb = tmp_path / "e.emb"
    assert main_export_embeddings(["--images", str(tmp_path / "corpus"),
                                   "--out", str(emb), "--image-size", "32",
                                   "--embed-dim", "16"]) == 0
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"match": [], "mismatch": [["ghost1", "ghost2"]]}))
    assert main_export_pairs(["--spec", str(spec),
                              "--out", str(tmp_path / "p.csv"),
                              "--embeddings", str(emb)]) == 2
    assert "unresolved: ghost1" in capsys.readouterr().err


def test_export_pairs_bad_spec_exits_2(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text("{broken")
    assert main_export_pairs(["--spec", str(spec),
                              "--out", str(tmp_path / "p.csv")]) == 2
