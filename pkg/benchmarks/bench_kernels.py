#!/usr/bin/env python3
"""Compare the numba-jitted scoring kernels against the pure-numpy
fallbacks on a synthetic index.

Run:  python3 benchmarks/bench_kernels.py [--sentences N] [--trials N]

The numpy path is what you get with ENTITYSCOUT_NO_NUMBA=1; results from
both paths are verified bit-identical before timing.
"""

import argparse
import statistics
import time

import numpy as np

from entityscout import _kernels
from entityscout.features import FeatureConfig
from entityscout.index import build_index
from entityscout.synth import SynthConfig, synth_corpus


def bench(fn, args, trials):
    fn(*args)  # warmup / jit compile
    samples = []
    for _ in range(trials):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sentences", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--trials", type=int, default=9)
    parser.add_argument("--query-features", type=int, default=200)
    args = parser.parse_args()

    print(f"building index over {args.sentences} synthetic sentences ...")
    corpus = synth_corpus(SynthConfig(n_sentences=args.sentences, seed=args.seed))
    index = build_index(corpus, FeatureConfig())
    n_tokens = index.token_count
    n_features = index.feature_count()
    print(f"{n_tokens} tokens, {n_features} features, "
          f"{index.post_tokens.size} postings; active backend: {_kernels.ACTIVE_BACKEND}")

    rng = np.random.default_rng(args.seed)
    fids = np.sort(
        rng.choice(n_features, size=min(args.query_features, n_features), replace=False)
    ).astype(np.int64)
    weights = rng.normal(size=fids.size)
    wvec = np.zeros(n_features)
    wvec[fids] = weights

    pairs = [
        (
            "accumulate (term-at-a-time)",
            _kernels.accumulate_scores_numpy,
            getattr(_kernels, "accumulate_scores_numba", None),
            (fids, weights, index.post_indptr, index.post_tokens, n_tokens),
        ),
        (
            "forward scores (full scan)",
            _kernels.forward_scores_numpy,
            getattr(_kernels, "forward_scores_numba", None),
            (index.fwd_indptr, index.fwd_feats, wvec),
        ),
    ]

    print(f"\n{'kernel':<30} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, fn_np, fn_nb, call_args in pairs:
        t_np = bench(fn_np, call_args, args.trials)
        if fn_nb is None:
            print(f"{name:<30} {t_np * 1e3:>10.2f}ms {'n/a':>12} {'n/a':>9}")
            continue
        out_np = fn_np(*call_args)
        out_nb = fn_nb(*call_args)
        for a, b in zip(np.atleast_1d(out_np), np.atleast_1d(out_nb)):
            assert np.array_equal(np.asarray(a), np.asarray(b)), "backends disagree"
        t_nb = bench(fn_nb, call_args, args.trials)
        print(
            f"{name:<30} {t_np * 1e3:>10.2f}ms {t_nb * 1e3:>10.2f}ms "
            f"{t_np / t_nb:>8.1f}x"
        )

    if not hasattr(_kernels, "accumulate_scores_numba"):
        print("\nnumba path unavailable (ENTITYSCOUT_NO_NUMBA set or numba missing); "
              "only the numpy fallback was timed.")


if __name__ == "__main__":
    main()
