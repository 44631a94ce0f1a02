import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from entityscout.corpus import Corpus, Document, Sentence, Token
from entityscout.features import FeatureConfig
from entityscout.index import build_index


def make_corpus(doc_sentences, gold=None, pos=None):
    """Build a corpus from lists of surface-string lists, one per doc.

    ``gold``/``pos`` mirror the nesting when given.
    """
    docs = []
    sid = 0
    for d, sents in enumerate(doc_sentences):
        built = []
        for i, surfaces in enumerate(sents):
            toks = []
            for j, surface in enumerate(surfaces):
                g = gold[d][i][j] if gold is not None else None
                p = pos[d][i][j] if pos is not None else None
                toks.append(Token(surface=surface, pos_tag=p, gold_label=g))
            built.append(Sentence(sentence_id=sid, tokens=tuple(toks)))
            sid += 1
        docs.append(Document(doc_id=f"doc-{d}", source_order=d, sentences=tuple(built)))
    return Corpus(docs)


@pytest.fixture(scope="session")
def toy_corpus():
    sents = [
        [
            ["Visit", "London", "now", "."],
            ["Now", "she", "sleeps", "."],
        ],
        [
            ["Malta", "is", "an", "island", "."],
            ["He", "visited", "Boston", "yesterday", "."],
        ],
    ]
    gold = [
        [
            ["O", "B-LOC", "O", "O"],
            ["O", "O", "O", "O"],
        ],
        [
            ["B-LOC", "O", "O", "O", "O"],
            ["O", "O", "B-LOC", "O", "O"],
        ],
    ]
    return make_corpus(sents, gold=gold)


@pytest.fixture(scope="session")
def toy_config():
    return FeatureConfig(window=1, ngram_max=3)


@pytest.fixture(scope="session")
def toy_index(toy_corpus, toy_config):
    return build_index(toy_corpus, toy_config)


@pytest.fixture(scope="session")
def toy_feature_sets(toy_corpus, toy_config):
    """Known per-token feature bags, extracted independently of the index
    arrays so they can drive oracle scoring."""
    from entityscout.features import extract

    out = []
    for sent in toy_corpus.sentences:
        for pos in range(len(sent.tokens)):
            out.append(extract(sent, pos, toy_config))
    return out
