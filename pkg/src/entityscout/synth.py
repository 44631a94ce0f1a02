"""Deterministic synthetic corpora for benchmarks and experiments.

Sentences are built from a Zipf-weighted invented vocabulary. A small
fraction of sentences carry single-token entity mentions drawn from a
fixed lexicon of distinct surface forms. The generator plants learnable
but imperfect signal: entities tend to follow cue words and use telltale
shapes/suffixes, while sentence-initial capitalization, capitalized
distractor names, and stray numbers act as confounds. Everything is a
pure function of the seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, Document, Sentence, Token

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
           "br", "dr", "gr", "kl", "pr", "st", "tr"]
_VOWELS = ["a", "e", "i", "o", "u"]
_CODAS = ["", "", "n", "s", "t", "l", "r", "m"]

_ENTITY_SUFFIXES = ["ia", "on", "ar", "ex", "os", "um", "eth", "oa"]
_CUES = ["visited", "near", "from", "toward", "beside", "crossing",
         "reaching", "leaving", "around", "beyond"]
_DIGIT_WORDS = ["1987", "2004", "311", "42", "1999", "760"]


@dataclass(frozen=True)
class SynthConfig:
    n_sentences: int = 20_000
    seed: int = 0
    positive_sentence_rate: float = 0.008
    n_entity_forms: int = 120
    vocab_size: int = 2_000
    cue_prob: float = 0.7
    distractor_rate: float = 0.01
    code_rate: float = 0.004
    digit_rate: float = 0.01
    doc_sentences: int = 10
    class_name: str = "ENT"
    min_len: int = 6
    max_len: int = 12


def _syllable(rng: random.Random) -> str:
    return rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS)


def _word(rng: random.Random, syllables: int) -> str:
    return "".join(_syllable(rng) for _ in range(syllables))


def _zipf_weights(n: int) -> list[float]:
    return [1.0 / (i + 1) for i in range(n)]


def _entity_form(rng: random.Random, style: int) -> str:
    if style == 0:  # capitalized with a telltale suffix
        return _word(rng, rng.randint(1, 2)).capitalize() + rng.choice(_ENTITY_SUFFIXES)
    if style == 1:  # code-like: letters + digits
        letters = "".join(rng.choice("BDFGKLMNPRSTVZ") for _ in range(rng.randint(2, 3)))
        return letters + str(rng.randint(10, 9999))
    return _word(rng, 2).capitalize()  # plain capitalized, hardest style


def synth_corpus(cfg: SynthConfig = SynthConfig()) -> Corpus:
    rng = random.Random(cfg.seed)

    vocab = []
    seen = set()
    while len(vocab) < cfg.vocab_size:
        w = _word(rng, rng.randint(2, 3))
        if w not in seen:
            seen.add(w)
            vocab.append(w)
    vocab_weights = _zipf_weights(len(vocab))

    entity_forms: list[str] = []
    entity_seen = set()
    while len(entity_forms) < cfg.n_entity_forms:
        form = _entity_form(rng, len(entity_forms) % 3)
        key = form.casefold()
        if key in entity_seen or key in seen:
            continue
        entity_seen.add(key)
        entity_forms.append(form)
    entity_weights = _zipf_weights(len(entity_forms))

    distractors = []
    while len(distractors) < 40:
        w = _word(rng, 2).capitalize()
        if w.casefold() not in entity_seen and w.casefold() not in seen:
            distractors.append(w)

    # code-shaped non-entities so no single shape feature nails the class
    code_distractors = []
    while len(code_distractors) < 30:
        w = _entity_form(rng, 1)
        if w.casefold() not in entity_seen:
            code_distractors.append(w)

    gold_b = f"B-{cfg.class_name}"
    sentences: list[list[Token]] = []
    for _ in range(cfg.n_sentences):
        length = rng.randint(cfg.min_len, cfg.max_len)
        words = rng.choices(vocab, weights=vocab_weights, k=length)
        words[0] = words[0].capitalize()
        tokens = [Token(surface=w, gold_label="O") for w in words]
        for i in range(1, length):
            r = rng.random()
            if r < cfg.distractor_rate:
                tokens[i] = Token(surface=rng.choice(distractors), gold_label="O")
            elif r < cfg.distractor_rate + cfg.code_rate:
                tokens[i] = Token(surface=rng.choice(code_distractors), gold_label="O")
            elif r < cfg.distractor_rate + cfg.code_rate + cfg.digit_rate:
                tokens[i] = Token(surface=rng.choice(_DIGIT_WORDS), gold_label="O")
        if rng.random() < cfg.positive_sentence_rate:
            n_mentions = 1 if rng.random() < 0.7 else 2
            positions = rng.sample(range(1, length), min(n_mentions, length - 1))
            for pos in positions:
                form = rng.choices(entity_forms, weights=entity_weights, k=1)[0]
                tokens[pos] = Token(surface=form, gold_label=gold_b)
                if pos >= 1 and rng.random() < cfg.cue_prob:
                    tokens[pos - 1] = Token(surface=rng.choice(_CUES), gold_label="O")
        sentences.append(tokens)

    docs = []
    sid = 0
    for start in range(0, len(sentences), cfg.doc_sentences):
        chunk = sentences[start : start + cfg.doc_sentences]
        sents = []
        for toks in chunk:
            sents.append(Sentence(sentence_id=sid, tokens=tuple(toks)))
            sid += 1
        docs.append(
            Document(
                doc_id=f"synth-{len(docs):05d}",
                source_order=len(docs),
                sentences=tuple(sents),
            )
        )
    return Corpus(docs)
