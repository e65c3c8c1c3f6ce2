"""Ground truth must not reach the detection path."""

import ast
from pathlib import Path

import pytest

import ssid
from ssid import core, ingest, synth

SRC = Path(ssid.__file__).parent
DETECTION_PATH = ["ingest", "metrics", "aadrnn", "trust", "detector", "core"]


def _identifiers_and_strings(tree):
    for node in ast.walk(tree):
        if isinstance(node, ast.Name):
            yield node.id
        elif isinstance(node, ast.Attribute):
            yield node.attr
        elif isinstance(node, ast.Constant) and isinstance(node.value, str):
            yield node.value
        elif isinstance(node, (ast.FunctionDef, ast.ClassDef, ast.arg)):
            yield getattr(node, "name", None) or node.arg


@pytest.mark.parametrize("module", DETECTION_PATH)
def test_detection_modules_never_mention_labels(module):
    tree = ast.parse((SRC / f"{module}.py").read_text())
    hits = [t for t in _identifiers_and_strings(tree) if t and "label" in t.lower()]
    assert hits == []


def test_only_evaluation_code_reads_the_label_column():
    readers = []
    for path in sorted(SRC.glob("*.py")):
        tree = ast.parse(path.read_text())
        for node in ast.walk(tree):
            if isinstance(node, ast.Subscript) and isinstance(node.slice, ast.Name) and node.slice.id == "LABEL_COLUMN":
                readers.append(path.stem)
    assert readers == ["evalkit"]


def test_detection_path_does_not_import_evalkit():
    for module in DETECTION_PATH:
        tree = ast.parse((SRC / f"{module}.py").read_text())
        for node in ast.walk(tree):
            if isinstance(node, ast.ImportFrom):
                names = [a.name for a in node.names]
                assert "evalkit" not in (node.module or "") and "evalkit" not in names


def test_flipping_labels_changes_nothing(tmp_path):
    rows = synth.generate(synth.desk_scenario(0))[:1500]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    synth.write_csv(rows, a)
    synth.write_csv([(*r[:4], 1 - r[4]) for r in rows], b)
    cfg = core.SsidConfig(seed=0)
    ra, rb = core.replay(ingest.load_stream(a), cfg), core.replay(ingest.load_stream(b), cfg)
    ra.write(tmp_path / "ra")
    rb.write(tmp_path / "rb")
    for f in ("events.jsonl", "scores.csv", "model.json"):
        assert (tmp_path / "ra" / f).read_bytes() == (tmp_path / "rb" / f).read_bytes()
