import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from entityscout.corpus import (
    JudgmentSet,
    Tokenizer,
    corpus_from_json,
    corpus_to_json,
    normalize_surface,
    read_conll,
    read_judgments,
    read_plaintext,
    write_conll,
)
from entityscout.errors import EmptyCorpusError, ParseError

CONLL_SAMPLE = """\
-DOCSTART- -X- O O

EU NNP B-NP B-ORG
rejects VBZ B-VP O
German JJ B-NP B-MISC
call NN I-NP O
. . O O

Peter NNP B-NP B-PER
Blackburn NNP I-NP I-PER

-DOCSTART- -X- O O

BRUSSELS NNP B-NP B-LOC
1996-08-22 CD I-NP O
"""


def test_read_conll_counts(tmp_path):
    path = tmp_path / "sample.conll"
    path.write_text(CONLL_SAMPLE)
    corpus = read_conll(path)
    assert len(corpus.docs) == 2
    assert corpus.sentence_count == 3
    assert corpus.token_count == 9


def test_read_conll_column_mapping(tmp_path):
    path = tmp_path / "one.conll"
    path.write_text("EU NNP B-NP B-ORG\n")
    corpus = read_conll(path)
    tok = corpus.sentences[0].tokens[0]
    assert tok.surface == "EU"
    assert tok.pos_tag == "NNP"
    assert tok.gold_label == "B-ORG"


def test_read_conll_docstart_only_is_empty(tmp_path):
    path = tmp_path / "empty.conll"
    path.write_text("-DOCSTART- -X- O O\n")
    with pytest.raises(EmptyCorpusError):
        read_conll(path)


def test_read_conll_empty_file(tmp_path):
    path = tmp_path / "empty.conll"
    path.write_text("")
    with pytest.raises(EmptyCorpusError):
        read_conll(path)


def test_read_conll_malformed_line_reports_lineno(tmp_path):
    path = tmp_path / "bad.conll"
    path.write_text("EU NNP B-NP B-ORG\nbroken line\n")
    with pytest.raises(ParseError) as exc:
        read_conll(path)
    assert exc.value.line == 2


def test_conll_round_trip(tmp_path):
    path = tmp_path / "sample.conll"
    path.write_text(CONLL_SAMPLE)
    corpus = read_conll(path)
    buf = io.StringIO()
    write_conll(corpus, buf)
    path2 = tmp_path / "rt.conll"
    path2.write_text(buf.getvalue())
    assert read_conll(path2) == corpus


def test_token_ids_dense_and_ordered(toy_corpus):
    expected = 0
    for doc in sorted(toy_corpus.docs, key=lambda d: d.source_order):
        for sent in doc.sentences:
            start = toy_corpus.sentence_token_start[sent.sentence_id]
            assert start == expected
            expected += len(sent.tokens)
    assert expected == toy_corpus.token_count


def test_locate_token(toy_corpus):
    assert toy_corpus.locate_token(0) == (0, 0)
    assert toy_corpus.token_surface(1) == "London"
    last = toy_corpus.token_count - 1
    sid, pos = toy_corpus.locate_token(last)
    assert toy_corpus.sentences[sid].tokens[pos].surface == "."


# --- tokenizer ----------------------------------------------------------------

def test_tokenizer_two_sentences():
    # hand-applied rules: break after '.' before ' It'; punctuation is its
    # own token, so the text yields 9 tokens across 2 sentences
    got = Tokenizer().sentences("Malta is an island. It is small.")
    assert got == [
        ["Malta", "is", "an", "island", "."],
        ["It", "is", "small", "."],
    ]


def test_tokenizer_no_break_without_uppercase():
    got = Tokenizer().sentences("e.g. apples are fine. really.")
    assert len(got) == 1


def test_read_plaintext_single_doc(tmp_path):
    path = tmp_path / "doc.txt"
    path.write_text("Malta is an island. It is small.")
    corpus = read_plaintext(path)
    assert len(corpus.docs) == 1
    assert corpus.sentence_count == 2
    assert corpus.token_count == 9
    assert all(t.gold_label is None for s in corpus.sentences for t in s.tokens)


def test_read_plaintext_single_token(tmp_path):
    path = tmp_path / "doc.txt"
    path.write_text("Hello")
    corpus = read_plaintext(path)
    assert (len(corpus.docs), corpus.sentence_count, corpus.token_count) == (1, 1, 1)


def test_read_plaintext_empty(tmp_path):
    path = tmp_path / "doc.txt"
    path.write_text("")
    with pytest.raises(EmptyCorpusError):
        read_plaintext(path)


def test_read_plaintext_records_mode(tmp_path):
    path = tmp_path / "docs.txt"
    path.write_text("First record here.\nSecond one. With two sentences.\n")
    corpus = read_plaintext(path, records=True)
    assert len(corpus.docs) == 2
    assert corpus.docs[1].sentences[0].surfaces() == ["Second", "one", "."]


def test_read_plaintext_bad_bytes(tmp_path):
    path = tmp_path / "doc.txt"
    path.write_bytes(b"ok so far \xff\xfe broken")
    with pytest.raises(ParseError) as exc:
        read_plaintext(path)
    assert "offset 10" in str(exc.value)


# --- normalize_surface ---------------------------------------------------------

def test_normalize_examples():
    assert normalize_surface("  Muhammad   Ali ") == "muhammad ali"
    assert normalize_surface("ALH84001") == "alh84001"
    assert normalize_surface(",") == ""
    assert normalize_surface("Phish Food") == normalize_surface("phish food")


@given(st.text(max_size=40))
def test_normalize_idempotent(s):
    once = normalize_surface(s)
    assert normalize_surface(once) == once


# --- judgments ------------------------------------------------------------------

def test_read_judgments(tmp_path):
    path = tmp_path / "judg.tsv"
    rows = [
        ("197.4", "Mammals cloned", "rabbit"),
        ("197.4", "Mammals cloned", "cow"),
        ("197.4", "Mammals cloned", "mouse"),
        ("197.4", "Mammals cloned", "pig"),
        ("9.9", "Too small", "a"),
        ("9.9", "Too small", "b"),
        ("9.9", "Too small", "c"),
        ("172.7", "Flavors", "Phish Food"),
        ("172.7", "Flavors", "phish food"),
        ("172.7", "Flavors", "Chubby Hubby"),
        ("172.7", "Flavors", "Cherry Garcia"),
        ("172.7", "Flavors", "Economic Crunch"),
    ]
    path.write_text("".join("\t".join(r) + "\n" for r in rows))
    sets = read_judgments(path)
    by_id = {j.query_id: j for j in sets}
    assert set(by_id) == {"197.4", "172.7"}  # 9.9 dropped: only 3 forms
    assert by_id["197.4"].accepted_forms == frozenset({"rabbit", "cow", "mouse", "pig"})
    assert len(by_id["172.7"].accepted_forms) == 4  # the two Phish Foods merge


def test_read_judgments_exclude(tmp_path):
    path = tmp_path / "judg.tsv"
    path.write_text(
        "".join(f"q1\tt\tform{i}\n" for i in range(5))
        + "".join(f"q2\tt\tother{i}\n" for i in range(5))
    )
    sets = read_judgments(path, exclude_ids={"q1"})
    assert [j.query_id for j in sets] == ["q2"]


def test_read_judgments_missing_column(tmp_path):
    path = tmp_path / "judg.tsv"
    path.write_text("q1\tonly-two-columns\n")
    with pytest.raises(ParseError):
        read_judgments(path)


def test_judgment_set_requires_normalized_nonempty():
    with pytest.raises(ValueError):
        JudgmentSet(query_id="x", title="t", accepted_forms=frozenset())
    with pytest.raises(ValueError):
        JudgmentSet(query_id="x", title="t", accepted_forms=frozenset({"Not Normalized"}))


# --- serialization ----------------------------------------------------------------

def test_corpus_json_round_trip(toy_corpus):
    again = corpus_from_json(corpus_to_json(toy_corpus))
    assert again == toy_corpus
