"""Hot scoring loops: numba-jitted kernels with pure-numpy fallbacks.

Set ``ENTITYSCOUT_NO_NUMBA=1`` to force the numpy path (the fallback is
also used automatically when numba is unavailable). Both paths produce
bit-identical float64 scores: they add posting weights in the same order,
and the numpy brute-force path uses ``np.bincount``, whose sequential
accumulation matches the jitted per-token loop exactly. That exactness is
load-bearing for the deterministic tie rule (score desc, token_id asc).

``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_disabled() -> bool:
    return os.environ.get("ENTITYSCOUT_NO_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


def accumulate_scores_numpy(feat_ids, weights, post_indptr, post_tokens, n_tokens):
    """Term-at-a-time accumulation over postings lists.

    Returns (scores, matched): float64 scores per token and a bool mask of
    tokens touched by at least one query feature.
    """
    scores = np.zeros(n_tokens, dtype=np.float64)
    matched = np.zeros(n_tokens, dtype=np.bool_)
    for f, w in zip(feat_ids, weights):
        seg = post_tokens[post_indptr[f] : post_indptr[f + 1]]
        scores[seg] += w
        matched[seg] = True
    return scores, matched


def forward_scores_numpy(fwd_indptr, fwd_feats, weight_vec):
    """Score every token by summing weights over its forward feature list."""
    n_tokens = fwd_indptr.size - 1
    gathered = weight_vec[fwd_feats]
    rows = np.repeat(np.arange(n_tokens), np.diff(fwd_indptr))
    # bincount adds sequentially, matching the jitted loop bit-for-bit
    return np.bincount(rows, weights=gathered, minlength=n_tokens)


def sentence_best_numpy(scores, mask, tok_sentence, n_sentences):
    """Per-sentence max over masked tokens.

    Returns (best_score, best_token) arrays of length n_sentences; sentences
    with no masked token get -inf / -1. Within a sentence, ties go to the
    lowest token id.
    """
    best_score = np.full(n_sentences, -np.inf, dtype=np.float64)
    best_token = np.full(n_sentences, -1, dtype=np.int64)
    ids = np.nonzero(mask)[0]
    if ids.size == 0:
        return best_score, best_token
    s = scores[ids]
    sent = tok_sentence[ids]
    order = np.lexsort((ids, -s, sent))
    sent_sorted = sent[order]
    uniq, first = np.unique(sent_sorted, return_index=True)
    chosen = order[first]
    best_score[uniq] = scores[ids[chosen]]
    best_token[uniq] = ids[chosen]
    return best_score, best_token


_HAVE_NUMBA = False
if not _numba_disabled():
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _HAVE_NUMBA = False

if _HAVE_NUMBA:

    @njit(cache=True)
    def _accumulate_nb(feat_ids, weights, post_indptr, post_tokens, n_tokens):
        scores = np.zeros(n_tokens, dtype=np.float64)
        matched = np.zeros(n_tokens, dtype=np.bool_)
        for j in range(feat_ids.size):
            f = feat_ids[j]
            w = weights[j]
            for p in range(post_indptr[f], post_indptr[f + 1]):
                t = post_tokens[p]
                scores[t] += w
                matched[t] = True
        return scores, matched

    @njit(cache=True)
    def _forward_scores_nb(fwd_indptr, fwd_feats, weight_vec):
        n_tokens = fwd_indptr.size - 1
        out = np.zeros(n_tokens, dtype=np.float64)
        for t in range(n_tokens):
            acc = 0.0
            for p in range(fwd_indptr[t], fwd_indptr[t + 1]):
                acc += weight_vec[fwd_feats[p]]
            out[t] = acc
        return out

    @njit(cache=True)
    def _sentence_best_nb(scores, mask, tok_sentence, n_sentences):
        best_score = np.full(n_sentences, -np.inf, dtype=np.float64)
        best_token = np.full(n_sentences, -1, dtype=np.int64)
        for t in range(scores.size):
            if not mask[t]:
                continue
            sid = tok_sentence[t]
            if scores[t] > best_score[sid]:
                best_score[sid] = scores[t]
                best_token[sid] = t
        return best_score, best_token

    def accumulate_scores_numba(feat_ids, weights, post_indptr, post_tokens, n_tokens):
        return _accumulate_nb(feat_ids, weights, post_indptr, post_tokens, n_tokens)

    def forward_scores_numba(fwd_indptr, fwd_feats, weight_vec):
        return _forward_scores_nb(fwd_indptr, fwd_feats, weight_vec)

    def sentence_best_numba(scores, mask, tok_sentence, n_sentences):
        return _sentence_best_nb(scores, mask, tok_sentence, n_sentences)

    accumulate_scores = accumulate_scores_numba
    forward_scores = forward_scores_numba
    sentence_best = sentence_best_numba
    ACTIVE_BACKEND = "numba"
else:
    accumulate_scores = accumulate_scores_numpy
    forward_scores = forward_scores_numpy
    sentence_best = sentence_best_numpy
    ACTIVE_BACKEND = "numpy"


def warmup() -> None:
    """Trigger jit compilation on tiny inputs so timings exclude it."""
    feat_ids = np.array([0], dtype=np.int64)
    weights = np.array([1.0])
    indptr = np.array([0, 1], dtype=np.int64)
    tokens = np.array([0], dtype=np.int32)
    accumulate_scores(feat_ids, weights, indptr, tokens, 1)
    forward_scores(indptr, tokens.astype(np.int32), weights)
    sentence_best(
        np.array([1.0]), np.array([True]), np.array([0], dtype=np.int32), 1
    )
