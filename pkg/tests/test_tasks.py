"""Corpus generation, ground truth, and the JSON round trip."""
import json

import pytest
from hypothesis import given, strategies as st

from evosynth.tasks import (ELEMENT_MAX, ELEMENT_MIN, VARIANTS,
                            CorpusFormatError, CorpusParams,
                            CorpusValidationError, TaskKind, generate_corpus,
                            ground_truth, load_corpus, save_corpus)

values_lists = st.lists(st.integers(ELEMENT_MIN, ELEMENT_MAX),
                        min_size=1, max_size=10)


# ---------------------------------------------------------------------------
# ground truth oracles, written independently of the generator


def test_count_ground_truth_is_length():
    assert ground_truth(TaskKind.COUNT, "none", [4, 4, 9]) == [3]
    assert ground_truth(TaskKind.COUNT, "none", [0]) == [1]


@given(values_lists)
def test_count_matches_len(values):
    assert ground_truth(TaskKind.COUNT, "none", values) == [len(values)]


@given(values_lists)
def test_max_min_variants(values):
    assert ground_truth(TaskKind.MAX_MIN, "max", values) == [max(values)]
    assert ground_truth(TaskKind.MAX_MIN, "min", values) == [min(values)]


@given(values_lists)
def test_inverse_variants(values):
    assert ground_truth(TaskKind.INVERSE, "inverted", values) == values[::-1]
    assert ground_truth(TaskKind.INVERSE, "identity", values) == values


@given(values_lists)
def test_sorted_variants(values):
    assert ground_truth(TaskKind.SORTED, "ascending", values) == sorted(values)
    assert ground_truth(TaskKind.SORTED, "descending", values) == \
        sorted(values, reverse=True)


def test_unknown_variant_rejected():
    with pytest.raises(ValueError):
        ground_truth(TaskKind.MAX_MIN, "median", [1, 2])


# ---------------------------------------------------------------------------
# generation invariants


@pytest.mark.parametrize("task", list(TaskKind))
def test_generated_corpora_are_consistent(task):
    corpus = generate_corpus(task, 30, 10, seed=5)
    assert len(corpus.train_instances) == 30
    assert len(corpus.test_instances) == 10
    for inst in corpus.instances():
        assert inst.variant in VARIANTS[task]
        for ex in (*inst.training, inst.testing):
            assert 2 <= len(inst.training) <= 5
            assert all(ELEMENT_MIN <= v <= ELEMENT_MAX for v in ex.input)
            assert list(ex.output) == ground_truth(task, inst.variant,
                                                   list(ex.input))


def test_count_lengths_capped_below_element_max():
    corpus = generate_corpus(TaskKind.COUNT, 200, 0, seed=1)
    lengths = {len(ex.input) for inst in corpus.train_instances
               for ex in (*inst.training, inst.testing)}
    assert max(lengths) <= 9 and min(lengths) >= 1


@pytest.mark.parametrize("task", [TaskKind.MAX_MIN, TaskKind.SORTED])
def test_first_training_example_reveals_variant(task):
    corpus = generate_corpus(task, 200, 0, seed=3)
    for inst in corpus.train_instances:
        assert len(set(inst.training[0].input)) >= 2


def test_variant_restriction():
    params = CorpusParams(variants=("inverted",))
    corpus = generate_corpus(TaskKind.INVERSE, 50, 50, seed=2, params=params)
    assert {i.variant for i in corpus.instances()} == {"inverted"}


def test_variant_restriction_validated():
    with pytest.raises(ValueError):
        generate_corpus(TaskKind.INVERSE, 1, 0, seed=0,
                        params=CorpusParams(variants=("sideways",)))


def test_same_seed_same_corpus():
    a = generate_corpus(TaskKind.SORTED, 20, 20, seed=7)
    b = generate_corpus(TaskKind.SORTED, 20, 20, seed=7)
    assert a == b
    c = generate_corpus(TaskKind.SORTED, 20, 20, seed=8)
    assert a != c


def test_both_variants_appear():
    corpus = generate_corpus(TaskKind.MAX_MIN, 100, 0, seed=11)
    assert {i.variant for i in corpus.train_instances} == {"max", "min"}


# ---------------------------------------------------------------------------
# save / load


def test_round_trip(tmp_path):
    corpus = generate_corpus(TaskKind.INVERSE, 8, 4, seed=13)
    path = tmp_path / "c.json"
    save_corpus(corpus, path)
    assert load_corpus(path) == corpus


def test_saved_json_is_stable(tmp_path):
    corpus = generate_corpus(TaskKind.COUNT, 3, 1, seed=4)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_corpus(corpus, p1)
    save_corpus(corpus, p2)
    assert p1.read_bytes() == p2.read_bytes()
    doc = json.loads(p1.read_text())
    assert list(doc) == ["task", "seed", "train_instances", "test_instances"]


def test_load_rejects_missing_field(tmp_path):
    corpus = generate_corpus(TaskKind.COUNT, 2, 1, seed=4)
    path = tmp_path / "c.json"
    save_corpus(corpus, path)
    doc = json.loads(path.read_text())
    del doc["train_instances"][1]["testing"]
    path.write_text(json.dumps(doc))
    with pytest.raises(CorpusFormatError, match=r"train_instances\[1\]"):
        load_corpus(path)


def test_load_rejects_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(CorpusFormatError, match="line"):
        load_corpus(path)


def test_load_rejects_out_of_range_element(tmp_path):
    corpus = generate_corpus(TaskKind.COUNT, 2, 1, seed=4)
    path = tmp_path / "c.json"
    save_corpus(corpus, path)
    doc = json.loads(path.read_text())
    doc["train_instances"][0]["testing"]["input"][0] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(CorpusValidationError):
        load_corpus(path)


def test_load_rejects_inconsistent_output(tmp_path):
    corpus = generate_corpus(TaskKind.COUNT, 2, 1, seed=4)
    path = tmp_path / "c.json"
    save_corpus(corpus, path)
    doc = json.loads(path.read_text())
    doc["train_instances"][0]["testing"]["output"] = [9, 9]
    path.write_text(json.dumps(doc))
    with pytest.raises(CorpusValidationError):
        load_corpus(path)


def test_load_rejects_bool_elements(tmp_path):
    corpus = generate_corpus(TaskKind.COUNT, 2, 1, seed=4)
    path = tmp_path / "c.json"
    save_corpus(corpus, path)
    doc = json.loads(path.read_text())
    doc["train_instances"][0]["testing"]["input"][0] = True
    path.write_text(json.dumps(doc))
    with pytest.raises(CorpusFormatError):
        load_corpus(path)
