import json
import math

import pytest

import canseg


def test_version():
    assert canseg.__version__


def test_levenshtein_and_evaluate():
    assert canseg.levenshtein("kitten", "sitting") == 3
    m = canseg.evaluate([["collide", "ion"], ["dog", "s"]], [["collide", "ion"], ["dogs"]])
    assert m["n"] == 2
    assert m["accuracy"] == pytest.approx(50.0)


def test_mcnemar_closed_form():
    a = [True] * 15 + [False] * 5
    b = [False] * 15 + [True] * 5
    r = canseg.mcnemar(a, b)
    assert r["b"] == 15 and r["c"] == 5
    assert r["statistic"] == 4.05


def test_classify_error():
    flags = canseg.classify_error("dogs", ["dog", "s"], ["doge", "s"])
    assert flags["overrestoration"] and flags["restoration"]


def test_synthetic_and_stats():
    words = canseg.generate_synthetic(50, seed=2)
    assert words == canseg.generate_synthetic(50, seed=2)
    assert len(words) == 50
    surface, morphemes = words[0]
    assert isinstance(surface, str) and isinstance(morphemes, list)
    stats = canseg.corpus_stats(words)
    assert stats["words"] == 50


def test_default_config_and_errors():
    cfg = canseg.default_config("il", "low")
    assert cfg["model"] == "il" and cfg["beam_width"] == 4
    with pytest.raises(canseg.CansegError):
        canseg.default_config("lstm")
    assert issubclass(canseg.CansegError, ValueError)


def test_train_predict_save_load(tmp_path):
    words = canseg.generate_synthetic(30, seed=4)
    config = {"embedding_size": 4, "encoder_hidden": 4, "decoder_hidden": 4,
              "action_embedding_size": 4, "epochs": 1}
    model, log = canseg.Model.train(words, words, "il", regime="low", config=config)
    assert model.kind == "il"
    assert len(log) == 1 and "dev_accuracy" in log[0]
    pred = model.predict(words[0][0])
    assert isinstance(pred, list)
    path = tmp_path / "m.bin"
    model.save(str(path))
    again = canseg.Model.load(str(path))
    assert again.predict(words[0][0]) == pred
    assert again.config == model.config


def test_run_cli(tmp_path):
    out = tmp_path / "c.tsv"
    assert canseg.run_cli(["synth", "--n", "10", "--out", str(out)]) == 0
    assert len(canseg.load_corpus(str(out))) == 10
    manifest = json.loads((tmp_path / "c.tsv.manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert canseg.run_cli(["train"]) == 2
