"""Inverted + forward index over per-token feature bags.

The index is immutable once built: readers never lock, queries are
independently parallelizable, and builds are exclusive-writer. All scoring
goes through the kernels in ``_kernels`` so the numba/numpy backends stay
interchangeable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import _kernels
from .corpus import Corpus, corpus_checksum, load_corpus, normalize_surface, save_corpus
from .errors import EntityScoutError
from .features import ClusterMap, FeatureConfig, extract
from .model import QueryModel

INDEX_FORMAT_VERSION = 1

MANIFEST_NAME = "manifest.json"
LEXICON_NAME = "lexicon.txt"
POSTINGS_NAME = "postings.npz"
FORWARD_NAME = "forward.npz"
CORPUS_NAME = "corpus.json.gz"


@dataclass(frozen=True)
class TokenOccurrence:
    token_id: int
    sentence_id: int
    doc_order: int
    position_in_sentence: int
    surface: str


class ScoredToken(NamedTuple):
    token_id: int
    score: float


class FeatureIndex:
    def __init__(
        self,
        corpus: Corpus,
        config: FeatureConfig,
        feature_strings: list[str],
        post_indptr: np.ndarray,
        post_tokens: np.ndarray,
        fwd_indptr: np.ndarray,
        fwd_feats: np.ndarray,
        manifest: dict,
    ):
        self.corpus = corpus
        self.config = config
        self.feature_strings = feature_strings
        self.lexicon = {f: i for i, f in enumerate(feature_strings)}
        self.post_indptr = post_indptr
        self.post_tokens = post_tokens
        self.fwd_indptr = fwd_indptr
        self.fwd_feats = fwd_feats
        self.manifest = manifest

        self.token_count = corpus.token_count
        self.sentence_count = corpus.sentence_count
        self.sent_indptr = np.asarray(corpus.sentence_token_start, dtype=np.int64)
        self.sent_doc_order = np.asarray(corpus.sentence_doc_order, dtype=np.int32)
        # token id -> sentence id, for exclusion masks and sentence ranking
        self.tok_sentence = np.repeat(
            np.arange(self.sentence_count, dtype=np.int32),
            np.diff(self.sent_indptr),
        )
        self.surfaces: list[str] = [
            t.surface for s in corpus.sentences for t in s.tokens
        ]

    @cached_property
    def norm_surfaces(self) -> list[str]:
        """normalize_surface of every token, memoized per distinct surface."""
        cache: dict[str, str] = {}
        out = []
        for s in self.surfaces:
            n = cache.get(s)
            if n is None:
                n = normalize_surface(s)
                cache[s] = n
            out.append(n)
        return out

    # -- lookups -------------------------------------------------------------

    def feature_count(self) -> int:
        return len(self.feature_strings)

    def postings(self, feature: str) -> np.ndarray:
        fid = self.lexicon.get(feature)
        if fid is None:
            return np.empty(0, dtype=self.post_tokens.dtype)
        return self.post_tokens[self.post_indptr[fid] : self.post_indptr[fid + 1]]

    def token(self, token_id: int) -> TokenOccurrence:
        sid = int(self.tok_sentence[token_id])
        return TokenOccurrence(
            token_id=token_id,
            sentence_id=sid,
            doc_order=int(self.sent_doc_order[sid]),
            position_in_sentence=token_id - int(self.sent_indptr[sid]),
            surface=self.surfaces[token_id],
        )

    def token_feature_ids(self, token_id: int) -> np.ndarray:
        return self.fwd_feats[self.fwd_indptr[token_id] : self.fwd_indptr[token_id + 1]]

    def token_features(self, token_id: int) -> list[str]:
        return [self.feature_strings[f] for f in self.token_feature_ids(token_id)]

    def sentence_token_ids(self, sentence_id: int) -> range:
        return range(
            int(self.sent_indptr[sentence_id]), int(self.sent_indptr[sentence_id + 1])
        )

    # -- scoring -------------------------------------------------------------

    def _query_vector(self, query: QueryModel) -> tuple[np.ndarray, np.ndarray]:
        pairs = []
        for feat, w in query.weights.items():
            fid = self.lexicon.get(feat)
            if fid is not None:
                pairs.append((fid, w))
        pairs.sort()  # fixed accumulation order, independent of dict history
        if not pairs:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
        fids = np.array([p[0] for p in pairs], dtype=np.int64)
        ws = np.array([p[1] for p in pairs], dtype=np.float64)
        return fids, ws

    def _excluded_token_mask(self, exclude: Iterable[int]) -> np.ndarray | None:
        exclude = set(exclude)
        if not exclude:
            return None
        sent_mask = np.zeros(self.sentence_count, dtype=np.bool_)
        sent_mask[list(exclude)] = True
        return sent_mask[self.tok_sentence]

    def candidate_scores(
        self, query: QueryModel, exclude: Iterable[int] = ()
    ) -> tuple[np.ndarray, np.ndarray]:
        """Scores plus candidate mask (matched >=1 query feature, sentence
        not excluded). Scores of non-candidates are meaningless."""
        fids, ws = self._query_vector(query)
        if fids.size == 0:
            return (
                np.zeros(self.token_count, dtype=np.float64),
                np.zeros(self.token_count, dtype=np.bool_),
            )
        scores, matched = _kernels.accumulate_scores(
            fids, ws, self.post_indptr, self.post_tokens, self.token_count
        )
        excl = self._excluded_token_mask(exclude)
        if excl is not None:
            matched &= ~excl
        return scores, matched

    def score_topk(
        self, query: QueryModel, k: int, exclude: Iterable[int] = ()
    ) -> list[ScoredToken]:
        """Top-k candidates under score(t) = sum of query weights over the
        token's features; ties break by token_id ascending."""
        if k < 1:
            raise ValueError("k must be >= 1")
        scores, matched = self.candidate_scores(query, exclude)
        ids = np.nonzero(matched)[0]
        if ids.size == 0:
            return []
        sel_ids, sel_scores = _rank_top(ids, scores[ids], k)
        return [ScoredToken(int(t), float(s)) for t, s in zip(sel_ids, sel_scores)]

    def raw_scores(self, query: QueryModel) -> np.ndarray:
        """Full-scan scores of every token via the forward index."""
        wvec = np.zeros(self.feature_count(), dtype=np.float64)
        for feat, w in query.weights.items():
            fid = self.lexicon.get(feat)
            if fid is not None:
                wvec[fid] = w
        return _kernels.forward_scores(self.fwd_indptr, self.fwd_feats, wvec)

    def score_all_bruteforce(self, query: QueryModel) -> list[ScoredToken]:
        """Rank every token by full scan; the latency baseline and the
        oracle that ``score_topk`` must agree with on its candidates."""
        scores = self.raw_scores(query)
        ids = np.arange(self.token_count)
        order = np.lexsort((ids, -scores))
        return [ScoredToken(int(t), float(scores[t])) for t in order]

    def sentence_rank(
        self, query: QueryModel, n: int, exclude: Iterable[int] = ()
    ) -> list[tuple[int, int, float]]:
        """Top-n sentences by their best token score; ties by sentence_id.

        Returns (sentence_id, best_token_id, score) triples.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        scores, matched = self.candidate_scores(query, exclude)
        if not matched.any():
            return []
        best_score, best_token = _kernels.sentence_best(
            scores, matched, self.tok_sentence, self.sentence_count
        )
        sids = np.nonzero(best_token >= 0)[0]
        order = np.lexsort((sids, -best_score[sids]))[:n]
        chosen = sids[order]
        return [
            (int(sid), int(best_token[sid]), float(best_score[sid])) for sid in chosen
        ]

    # -- integrity & persistence ----------------------------------------------

    def check_integrity(self) -> None:
        """Exhaustive forward/inverted cross-check; raises on any mismatch."""
        if self.post_indptr[-1] != self.fwd_indptr[-1]:
            raise EntityScoutError("postings/forward size mismatch")
        for fid in range(self.feature_count()):
            seg = self.post_tokens[self.post_indptr[fid] : self.post_indptr[fid + 1]]
            if seg.size and np.any(np.diff(seg) <= 0):
                raise EntityScoutError(
                    f"postings for feature {fid} not strictly ascending"
                )
        inv_pairs = set()
        for fid in range(self.feature_count()):
            for t in self.post_tokens[self.post_indptr[fid] : self.post_indptr[fid + 1]]:
                inv_pairs.add((int(fid), int(t)))
        fwd_pairs = set()
        for t in range(self.token_count):
            for fid in self.token_feature_ids(t):
                fwd_pairs.add((int(fid), int(t)))
        if inv_pairs != fwd_pairs:
            raise EntityScoutError("forward and inverted views disagree")

    def save(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for feat in self.feature_strings:
            if "\n" in feat or "\r" in feat:
                raise EntityScoutError(f"feature contains newline: {feat!r}")
        (out_dir / LEXICON_NAME).write_text(
            "".join(f + "\n" for f in self.feature_strings), encoding="utf-8"
        )
        np.savez(
            out_dir / POSTINGS_NAME,
            indptr=self.post_indptr,
            tokens=self.post_tokens,
        )
        np.savez(
            out_dir / FORWARD_NAME,
            indptr=self.fwd_indptr,
            feats=self.fwd_feats,
        )
        save_corpus(self.corpus, out_dir / CORPUS_NAME)
        (out_dir / MANIFEST_NAME).write_text(
            json.dumps(self.manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def build_index(
    corpus: Corpus,
    cfg: FeatureConfig,
    clusters: ClusterMap | None = None,
    out_dir: str | Path | None = None,
) -> FeatureIndex:
    """Extract features for every token and materialize both index views.

    Deterministic for fixed inputs: feature ids are assigned in first-seen
    order over tokens scanned in token-id order, with each token's features
    visited in sorted order.
    """
    lexicon: dict[str, int] = {}
    fwd_lists: list[np.ndarray] = []
    n_postings = 0
    for sent in corpus.sentences:
        for pos in range(len(sent.tokens)):
            feats = sorted(extract(sent, pos, cfg, clusters))
            fids = np.empty(len(feats), dtype=np.int32)
            for i, f in enumerate(feats):
                fid = lexicon.get(f)
                if fid is None:
                    fid = len(lexicon)
                    lexicon[f] = fid
                fids[i] = fid
            fids.sort()
            fwd_lists.append(fids)
            n_postings += fids.size

    n_tokens = corpus.token_count
    fwd_indptr = np.zeros(n_tokens + 1, dtype=np.int64)
    fwd_indptr[1:] = np.cumsum([a.size for a in fwd_lists])
    fwd_feats = (
        np.concatenate(fwd_lists) if n_postings else np.empty(0, dtype=np.int32)
    )

    # invert: stable sort by feature id keeps ascending token order per feature
    n_features = len(lexicon)
    counts = np.bincount(fwd_feats, minlength=n_features) if n_postings else np.zeros(
        n_features, dtype=np.int64
    )
    post_indptr = np.zeros(n_features + 1, dtype=np.int64)
    post_indptr[1:] = np.cumsum(counts)
    token_of = np.repeat(np.arange(n_tokens, dtype=np.int32), np.diff(fwd_indptr))
    post_tokens = token_of[np.argsort(fwd_feats, kind="stable")]

    feature_strings = list(lexicon.keys())
    manifest = {
        "format_version": INDEX_FORMAT_VERSION,
        "corpus_sha256": corpus_checksum(corpus),
        "feature_config": cfg.to_json(),
        "counts": {
            "documents": len(corpus.docs),
            "sentences": corpus.sentence_count,
            "tokens": n_tokens,
            "features": n_features,
            "postings": n_postings,
        },
    }
    index = FeatureIndex(
        corpus=corpus,
        config=cfg,
        feature_strings=feature_strings,
        post_indptr=post_indptr,
        post_tokens=post_tokens,
        fwd_indptr=fwd_indptr,
        fwd_feats=fwd_feats,
        manifest=manifest,
    )
    if out_dir is not None:
        index.save(out_dir)
    return index


def open_index(index_dir: str | Path) -> FeatureIndex:
    index_dir = Path(index_dir)
    manifest = json.loads((index_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    version = manifest.get("format_version")
    if version != INDEX_FORMAT_VERSION:
        raise EntityScoutError(f"unsupported index format version {version}")
    corpus = load_corpus(index_dir / CORPUS_NAME)
    if corpus_checksum(corpus) != manifest["corpus_sha256"]:
        raise EntityScoutError("corpus checksum does not match manifest")
    cfg = FeatureConfig.from_json(manifest["feature_config"])
    feature_strings = (
        (index_dir / LEXICON_NAME).read_text(encoding="utf-8").splitlines()
    )
    with np.load(index_dir / POSTINGS_NAME) as npz:
        post_indptr = npz["indptr"]
        post_tokens = npz["tokens"]
    with np.load(index_dir / FORWARD_NAME) as npz:
        fwd_indptr = npz["indptr"]
        fwd_feats = npz["feats"]
    return FeatureIndex(
        corpus=corpus,
        config=cfg,
        feature_strings=feature_strings,
        post_indptr=post_indptr,
        post_tokens=post_tokens,
        fwd_indptr=fwd_indptr,
        fwd_feats=fwd_feats,
        manifest=manifest,
    )


def _rank_top(ids: np.ndarray, scores: np.ndarray, k: int):
    """Exact (score desc, id asc) top-k without sorting all candidates."""
    n = ids.size
    if k >= n:
        order = np.lexsort((ids, -scores))
        return ids[order], scores[order]
    part = np.argpartition(-scores, k - 1)[:k]
    thresh = scores[part].min()
    above = scores > thresh
    n_above = int(above.sum())
    sel_ids = [ids[above]]
    sel_scores = [scores[above]]
    need = k - n_above
    if need > 0:
        at_ids = ids[scores == thresh]
        if need < at_ids.size:  # need smallest ids win the tie at the cut
            at_ids = np.partition(at_ids, need - 1)[:need]
        sel_ids.append(at_ids)
        sel_scores.append(np.full(at_ids.size, thresh))
    out_ids = np.concatenate(sel_ids)
    out_scores = np.concatenate(sel_scores)
    order = np.lexsort((out_ids, -out_scores))
    return out_ids[order], out_scores[order]
