# Copyright 2026 The kgdial Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math

import pytest

import kgdial


def test_retrieve_groups_by_mention():
    kb = kgdial.KnowledgeBase([("coffee", "RelatedTo", "milk"), ("milk", "IsA", "drink")])
    assert len(kb) == 2
    subgraphs = kb.retrieve("I like milk")
    assert [g["mention"] for g in subgraphs] == ["milk"]
    assert subgraphs[0]["triples"] == [("coffee", "RelatedTo", "milk"), ("milk", "IsA", "drink")]


def test_metric_hand_examples():
    assert kgdial.bleu(["the cat sat"], ["the cat sat down"], 1) == pytest.approx(0.7165, abs=1e-4)
    assert kgdial.nist(["a b c", "d e f"], ["a b c", "d e f"], 1) == pytest.approx(math.log2(6))
    assert kgdial.meteor(["b a"], ["a b"]) == pytest.approx(0.5, abs=1e-6)
    assert kgdial.distinct(["i am i am"], 1) == 0.5
    assert kgdial.entropy(["a b c d"] * 3 + ["e f g h"], 4) == pytest.approx(0.5623, abs=1e-4)
    report = kgdial.evaluate(["a b c d"], ["a b c d"])
    assert report["bleu_4"] == pytest.approx(1.0)


def test_errors_are_translated():
    with pytest.raises(kgdial.Error):
        kgdial.distinct(["a"], 2)


def test_pipeline_round_trip(tmp_path):
    data = tmp_path / "data"
    manifest = kgdial.synthesize(str(data), n_pairs=8)
    assert len(manifest) == 8
    stats = kgdial.prepare(str(data / "kb.tsv"), str(data / "corpus.jsonl"), str(tmp_path / "wd"))
    assert stats["pairs"] == 8
    losses = kgdial.train(
        str(tmp_path / "wd"),
        {"embed_dim": "16", "heads": "2", "enc_layers": "1", "dec_layers": "1", "epochs": "2"},
    )
    assert len(losses) == 2 and all(math.isfinite(x) for x in losses)

    gen = kgdial.Generator(str(tmp_path / "wd" / "model.ckpt"), str(tmp_path / "wd"))
    kb = kgdial.KnowledgeBase.load(str(data / "kb.tsv"))
    post = json.loads((data / "corpus.jsonl").read_text().splitlines()[0])["post"]
    a = gen.generate(post, kb, max_new=6)
    assert a == gen.generate(post, kb, max_new=6)
    assert len(a.split()) <= 6

    gen.ablation = "no_kg"
    before = kb.lookup_count()
    assert gen.generate(post, None) == gen.generate(post, kb)
    assert kb.lookup_count() == before


def test_cli_in_process(tmp_path):
    code, out, _ = kgdial.run_cli(["synth", "--out", str(tmp_path), "--pairs", "4"])
    assert code == 0 and "4 pairs" in out
    code, _, err = kgdial.run_cli(["nonsense"])
    assert code == 1 and "nonsense" in err
