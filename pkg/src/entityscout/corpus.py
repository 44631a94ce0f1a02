"""Corpus ingestion and the canonical document/sentence/token data model.

Token ids are dense ``0..token_count-1`` in (document source_order, sentence,
position) order; sentence ids are dense in the same order. Both are assigned
at construction time and never change afterwards: a loaded corpus is
immutable and safe to share across threads.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import json
import re
import string
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCorpusError, ParseError

_BIO_RE = re.compile(r"^(O|[BI]-\S+)$")
_STRIP_CHARS = string.punctuation + string.whitespace
_WS_RE = re.compile(r"\s+")

CORPUS_FORMAT_VERSION = 1


def normalize_surface(s: str) -> str:
    """Canonical surface form used for dedup, judgments, and entity lists.

    Case-folds, collapses interior whitespace, and strips surrounding
    whitespace/punctuation. Punctuation-only input normalizes to "".
    Idempotent by construction.
    """
    s = s.casefold()
    s = _WS_RE.sub(" ", s)
    return s.strip(_STRIP_CHARS)


@dataclass(frozen=True)
class Token:
    surface: str
    pos_tag: str | None = None
    gold_label: str | None = None


@dataclass(frozen=True)
class Sentence:
    sentence_id: int
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


@dataclass(frozen=True)
class Document:
    doc_id: str
    source_order: int
    sentences: tuple[Sentence, ...]


class Corpus:
    """Immutable token collection with dense ids and flat accessor views."""

    def __init__(self, docs: list[Document]):
        if not docs:
            raise EmptyCorpusError("corpus has no documents")
        orders = [d.source_order for d in docs]
        if len(set(orders)) != len(orders):
            raise ValueError("document source_order values must be unique")
        self.docs: tuple[Document, ...] = tuple(docs)
        self.sentences: tuple[Sentence, ...] = tuple(
            s for d in self.docs for s in d.sentences
        )
        self.sentence_doc_order: tuple[int, ...] = tuple(
            d.source_order for d in self.docs for _ in d.sentences
        )
        starts = [0]
        for s in self.sentences:
            starts.append(starts[-1] + len(s.tokens))
        # sentence_token_start[i] is the token id of sentence i's first token
        self.sentence_token_start: tuple[int, ...] = tuple(starts)
        self.token_count: int = starts[-1]
        self.sentence_count: int = len(self.sentences)
        if self.token_count == 0:
            raise EmptyCorpusError("corpus has no tokens")

    def sentence(self, sentence_id: int) -> Sentence:
        return self.sentences[sentence_id]

    def doc_of_sentence(self, sentence_id: int) -> Document:
        order = self.sentence_doc_order[sentence_id]
        return self._docs_by_order()[order]

    def _docs_by_order(self) -> dict[int, Document]:
        by_order = getattr(self, "_by_order", None)
        if by_order is None:
            by_order = {d.source_order: d for d in self.docs}
            self._by_order = by_order
        return by_order

    def token_surface(self, token_id: int) -> str:
        sid, pos = self.locate_token(token_id)
        return self.sentences[sid].tokens[pos].surface

    def locate_token(self, token_id: int) -> tuple[int, int]:
        """Map a global token id to (sentence_id, position_in_sentence)."""
        if not 0 <= token_id < self.token_count:
            raise IndexError(f"token id {token_id} out of range")
        import bisect

        sid = bisect.bisect_right(self.sentence_token_start, token_id) - 1
        return sid, token_id - self.sentence_token_start[sid]

    def __eq__(self, other):
        return isinstance(other, Corpus) and self.docs == other.docs

    def __repr__(self):
        return (
            f"Corpus(docs={len(self.docs)}, sentences={self.sentence_count}, "
            f"tokens={self.token_count})"
        )


@dataclass(frozen=True)
class JudgmentSet:
    """Accepted entity surface forms for one query, normalized."""

    query_id: str
    title: str
    accepted_forms: frozenset[str]

    def __post_init__(self):
        if not self.accepted_forms:
            raise ValueError(f"judgment set {self.query_id} has no accepted forms")
        for form in self.accepted_forms:
            if form != normalize_surface(form):
                raise ValueError(f"form {form!r} is not normalized")


@dataclass(frozen=True)
class Tokenizer:
    """Deterministic whitespace+punctuation tokenizer with rule-based
    sentence breaking: a sentence ends after [.?!] followed by whitespace
    and an uppercase letter. No models, no downloads."""

    _TOKEN_RE = re.compile(r"\w+|[^\w\s]")
    _SENT_BREAK_RE = re.compile(r"(?<=[.?!])\s+(?=[A-Z])")

    def sentence_texts(self, text: str) -> list[str]:
        parts = self._SENT_BREAK_RE.split(text)
        return [p for p in (part.strip() for part in parts) if p]

    def tokenize(self, sentence_text: str) -> list[str]:
        return self._TOKEN_RE.findall(sentence_text)

    def sentences(self, text: str) -> list[list[str]]:
        out = []
        for part in self.sentence_texts(text):
            toks = self.tokenize(part)
            if toks:
                out.append(toks)
        return out


def _build_corpus(doc_buffers: list[tuple[str, list[list[Token]]]]) -> Corpus:
    docs = []
    sid = 0
    for order, (doc_id, sentences) in enumerate(doc_buffers):
        sents = []
        for toks in sentences:
            sents.append(Sentence(sentence_id=sid, tokens=tuple(toks)))
            sid += 1
        if sents:
            docs.append(Document(doc_id=doc_id, source_order=order, sentences=tuple(sents)))
    if not docs:
        raise EmptyCorpusError("no tokens found")
    return Corpus(docs)


def read_conll(path: str | Path) -> Corpus:
    """Read a whitespace-separated SURFACE POS CHUNK NER file.

    Blank lines separate sentences; a line whose first column is
    ``-DOCSTART-`` starts a new document and is not itself a token.
    """
    path = Path(path)
    doc_buffers: list[tuple[str, list[list[Token]]]] = []
    cur_sentences: list[list[Token]] = []
    cur_tokens: list[Token] = []
    doc_count = 0

    def flush_sentence():
        nonlocal cur_tokens
        if cur_tokens:
            cur_sentences.append(cur_tokens)
            cur_tokens = []

    def flush_doc():
        nonlocal cur_sentences
        flush_sentence()
        if cur_sentences:
            doc_buffers.append((f"doc-{len(doc_buffers)}", cur_sentences))
            cur_sentences = []

    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                flush_sentence()
                continue
            cols = line.split()
            if cols[0] == "-DOCSTART-":
                flush_doc()
                doc_count += 1
                continue
            if len(cols) != 4:
                raise ParseError(
                    f"expected 4 columns, got {len(cols)}: {line!r}",
                    path=path,
                    line=lineno,
                )
            surface, pos, _chunk, ner = cols
            if not _BIO_RE.match(ner):
                raise ParseError(f"bad BIO label {ner!r}", path=path, line=lineno)
            cur_tokens.append(Token(surface=surface, pos_tag=pos, gold_label=ner))
    flush_doc()
    if not doc_buffers:
        raise EmptyCorpusError(f"{path}: no tokens")
    return _build_corpus(doc_buffers)


def write_conll(corpus: Corpus, out: io.TextIOBase | str | Path) -> None:
    """Write ``corpus`` in the 4-column layout accepted by read_conll.

    Missing POS tags are written as ``-X-`` and missing labels as ``O``;
    the chunk column is always ``O`` (it is never interpreted on read).
    """
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8") as fh:
            write_conll(corpus, fh)
        return
    for doc in corpus.docs:
        out.write("-DOCSTART- -X- O O\n\n")
        for sent in doc.sentences:
            for tok in sent.tokens:
                pos = tok.pos_tag if tok.pos_tag is not None else "-X-"
                label = tok.gold_label if tok.gold_label is not None else "O"
                out.write(f"{tok.surface} {pos} O {label}\n")
            out.write("\n")


def read_plaintext(
    path: str | Path,
    tokenizer: Tokenizer | None = None,
    records: bool = False,
) -> Corpus:
    """Read an unlabeled corpus from plain text.

    With ``records=False`` the whole file is one document; with
    ``records=True`` each non-empty line is a document.
    """
    path = Path(path)
    tokenizer = tokenizer or Tokenizer()
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(
            f"undecodable bytes at offset {exc.start}", path=path
        ) from exc

    doc_buffers: list[tuple[str, list[list[Token]]]] = []
    if records:
        for i, line in enumerate(text.splitlines()):
            sentences = [
                [Token(surface=s) for s in toks] for toks in tokenizer.sentences(line)
            ]
            if sentences:
                doc_buffers.append((f"{path.name}:{i}", sentences))
    else:
        sentences = [
            [Token(surface=s) for s in toks] for toks in tokenizer.sentences(text)
        ]
        if sentences:
            doc_buffers.append((path.name, sentences))
    if not doc_buffers:
        raise EmptyCorpusError(f"{path}: no tokens")
    return _build_corpus(doc_buffers)


def read_judgments(
    path: str | Path,
    min_forms: int = 4,
    exclude_ids: set[str] | None = None,
) -> list[JudgmentSet]:
    """Read a ``query_id<TAB>title<TAB>form`` file into judgment sets.

    Forms are normalized and grouped per query; queries with fewer than
    ``min_forms`` distinct normalized forms are dropped, as are ids in
    ``exclude_ids``.
    """
    path = Path(path)
    titles: dict[str, str] = {}
    forms: dict[str, set[str]] = {}
    order: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError(
                    f"expected 3 tab-separated columns, got {len(cols)}",
                    path=path,
                    line=lineno,
                )
            qid, title, form = cols
            norm = normalize_surface(form)
            if not norm:
                continue
            if qid not in forms:
                forms[qid] = set()
                titles[qid] = title
                order.append(qid)
            forms[qid].add(norm)
    out = []
    exclude_ids = exclude_ids or set()
    for qid in order:
        if qid in exclude_ids or len(forms[qid]) < min_forms:
            continue
        out.append(
            JudgmentSet(
                query_id=qid, title=titles[qid], accepted_forms=frozenset(forms[qid])
            )
        )
    return out


# --- persistence -----------------------------------------------------------

def corpus_to_json(corpus: Corpus) -> dict:
    return {
        "version": CORPUS_FORMAT_VERSION,
        "docs": [
            {
                "doc_id": d.doc_id,
                "sentences": [
                    [[t.surface, t.pos_tag, t.gold_label] for t in s.tokens]
                    for s in d.sentences
                ],
            }
            for d in corpus.docs
        ],
    }


def corpus_from_json(data: dict) -> Corpus:
    if data.get("version") != CORPUS_FORMAT_VERSION:
        raise ParseError(f"unsupported corpus format version {data.get('version')}")
    doc_buffers = [
        (
            d["doc_id"],
            [
                [Token(surface=t[0], pos_tag=t[1], gold_label=t[2]) for t in sent]
                for sent in d["sentences"]
            ],
        )
        for d in data["docs"]
    ]
    return _build_corpus(doc_buffers)


def canonical_corpus_bytes(corpus: Corpus) -> bytes:
    return json.dumps(
        corpus_to_json(corpus), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")


def corpus_checksum(corpus: Corpus) -> str:
    return hashlib.sha256(canonical_corpus_bytes(corpus)).hexdigest()


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with gzip.GzipFile(str(path), "wb", mtime=0) as fh:
        fh.write(canonical_corpus_bytes(corpus))


def load_corpus(path: str | Path) -> Corpus:
    with gzip.open(str(path), "rb") as fh:
        return corpus_from_json(json.loads(fh.read().decode("utf-8")))
