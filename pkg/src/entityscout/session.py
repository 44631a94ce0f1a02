"""Interactive labeling sessions: serve a sentence, collect labels,
retrain, re-rank.

A session strictly alternates next_sentence / submit_labels, never serves
a sentence twice, and is fully determined by (corpus, config, strategy,
seed, annotator). Random selection derives its generator from
(seed, round) so a persisted session resumes mid-stream without drift.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .corpus import Corpus, JudgmentSet, Sentence, Token, normalize_surface
from .errors import SessionComplete, SessionError, SingleClassError
from .evaluation import LearningCurve, RankedToken, dedup_ranking, unique_ap
from .index import FeatureIndex
from .model import LabeledToken, QueryModel, TrainConfig, prune, train

STRATEGIES = ("interactive", "docrank", "random_pool", "unsure")


class SimulatedUser:
    """Deterministic annotator that replays gold labels."""

    def __init__(self, class_name: str, is_positive: Callable[[Token], bool]):
        self.class_name = class_name
        self._is_positive = is_positive

    @classmethod
    def from_gold(cls, class_name: str) -> "SimulatedUser":
        positive = {f"B-{class_name}", f"I-{class_name}"}
        return cls(class_name, lambda tok: tok.gold_label in positive)

    @classmethod
    def from_judgments(cls, judgments: JudgmentSet) -> "SimulatedUser":
        forms = judgments.accepted_forms
        return cls(
            judgments.query_id,
            lambda tok: normalize_surface(tok.surface) in forms,
        )

    def labels_for(self, sentence: Sentence) -> list[bool]:
        return [self._is_positive(tok) for tok in sentence.tokens]

    def positive_sentences(self, corpus: Corpus) -> tuple[int, ...]:
        """Sentence ids containing at least one positive, collection order."""
        return tuple(
            s.sentence_id
            for s in corpus.sentences
            if any(self._is_positive(t) for t in s.tokens)
        )

    def judgment_set(self, corpus: Corpus) -> JudgmentSet:
        """Distinct normalized positive surfaces as an accepted-forms set."""
        forms = {
            normalize_surface(t.surface)
            for s in corpus.sentences
            for t in s.tokens
            if self._is_positive(t)
        }
        forms.discard("")
        return JudgmentSet(
            query_id=self.class_name, title=self.class_name, accepted_forms=frozenset(forms)
        )


@dataclass
class Session:
    session_id: str
    class_name: str
    strategy: str
    seed: int
    seed_terms: tuple[str, ...] = ()
    seed_sentences: tuple[int, ...] = ()  # simulation fallback for cold start
    pool_docs: frozenset[int] | None = None
    doc_ranking: tuple[int, ...] | None = None
    prune_to: int | None = None
    retrain_every: int = 1
    rank_within_pool: bool = True
    hp: TrainConfig = TrainConfig()
    labeled_sentences: list[tuple[int, tuple[bool, ...]]] = field(default_factory=list)
    model: QueryModel | None = None
    pending: int | None = None
    round: int = 0
    exclude: set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise SessionError(f"unknown strategy {self.strategy!r}")
        if self.retrain_every < 1:
            raise SessionError("retrain_every must be >= 1")

    # -- scope ---------------------------------------------------------------

    def _scope_sentence_ids(self, index: FeatureIndex) -> list[int]:
        if self.pool_docs is None:
            return list(range(index.sentence_count))
        return [
            sid
            for sid in range(index.sentence_count)
            if int(index.sent_doc_order[sid]) in self.pool_docs
        ]

    def _rank_exclude(self, index: FeatureIndex) -> set[int]:
        out = set(self.exclude)
        if self.pool_docs is not None:
            out.update(
                sid
                for sid in range(index.sentence_count)
                if int(index.sent_doc_order[sid]) not in self.pool_docs
            )
        return out

    def exec_model(self) -> QueryModel | None:
        if self.model is not None and self.prune_to is not None:
            return prune(self.model, self.prune_to)
        return self.model

    # -- serving -------------------------------------------------------------

    def next_sentence(self, index: FeatureIndex) -> tuple[int, list[float]]:
        if self.pending is not None:
            raise SessionError("a served sentence is still awaiting labels")
        scope = self._scope_sentence_ids(index)
        open_ids = [sid for sid in scope if sid not in self.exclude]
        if not open_ids:
            raise SessionComplete(self.session_id)

        model = self.exec_model()
        if model is None:
            sid = self._cold_start(index, open_ids)
        elif self.strategy == "interactive":
            ranked = index.sentence_rank(model, 1, exclude=self._rank_exclude(index))
            sid = ranked[0][0] if ranked else self._cold_start(index, open_ids)
        elif self.strategy == "docrank":
            sid = self._docrank_pick(index, open_ids)
        elif self.strategy == "random_pool":
            rng = random.Random(f"{self.seed}:{self.round}")
            sid = open_ids[rng.randrange(len(open_ids))]
        else:  # unsure
            sid = self._unsure_pick(index, model, open_ids)

        self.pending = sid
        return sid, self._token_scores(index, sid, model)

    def _cold_start(self, index: FeatureIndex, open_ids: list[int]) -> int:
        if self.seed_terms:
            terms = {t.casefold() for t in self.seed_terms}
            for sid in open_ids:
                surfaces = index.corpus.sentence(sid).surfaces()
                if any(s.casefold() in terms for s in surfaces):
                    return sid
        open_set = set(open_ids)
        for sid in self.seed_sentences:
            if sid in open_set:
                return sid
        return open_ids[0]

    def _docrank_pick(self, index: FeatureIndex, open_ids: list[int]) -> int:
        if self.doc_ranking is not None:
            doc_order = list(self.doc_ranking)
        else:
            doc_order = sorted({int(o) for o in index.sent_doc_order})
        open_by_doc: dict[int, int] = {}
        for sid in open_ids:  # ascending, so first kept per doc is earliest
            order = int(index.sent_doc_order[sid])
            open_by_doc.setdefault(order, sid)
        for order in doc_order:
            if order in open_by_doc:
                return open_by_doc[order]
        return open_ids[0]

    def _unsure_pick(
        self, index: FeatureIndex, model: QueryModel, open_ids: list[int]
    ) -> int:
        z = index.raw_scores(model) + model.bias
        open_mask = np.zeros(index.sentence_count, dtype=np.bool_)
        open_mask[open_ids] = True
        ids = np.nonzero(open_mask[index.tok_sentence])[0]
        pick = ids[np.lexsort((ids, np.abs(z[ids])))[0]]
        return int(index.tok_sentence[pick])

    def _token_scores(
        self, index: FeatureIndex, sentence_id: int, model: QueryModel | None
    ) -> list[float]:
        token_ids = index.sentence_token_ids(sentence_id)
        if model is None:
            return [0.0 for _ in token_ids]
        return [
            sum(model.weights.get(f, 0.0) for f in index.token_features(t))
            for t in token_ids
        ]

    # -- labeling ------------------------------------------------------------

    def submit_labels(
        self, index: FeatureIndex, sentence_id: int, labels: list[bool]
    ) -> "Session":
        if self.pending is None or sentence_id != self.pending:
            raise SessionError(
                f"sentence {sentence_id} was not the one last served"
            )
        n_tokens = len(index.corpus.sentence(sentence_id).tokens)
        if len(labels) != n_tokens:
            raise SessionError(
                f"expected {n_tokens} labels, got {len(labels)}"
            )
        self.labeled_sentences.append((sentence_id, tuple(bool(x) for x in labels)))
        self.exclude.add(sentence_id)
        self.pending = None
        self.round += 1
        if self.round % self.retrain_every == 0:
            self._retrain(index)
        return self

    def _retrain(self, index: FeatureIndex) -> None:
        examples = [
            LabeledToken(
                token_id=tid,
                feature_vector=frozenset(index.token_features(tid)),
                label=lab,
            )
            for sid, labs in self.labeled_sentences
            for tid, lab in zip(index.sentence_token_ids(sid), labs)
        ]
        try:
            self.model = train(examples, self.hp, class_name=self.class_name)
        except SingleClassError:
            pass  # keep ranking with the prior model (usually none yet)

    def labeled_token_count(self) -> int:
        return sum(len(labs) for _sid, labs in self.labeled_sentences)

    # -- outputs ---------------------------------------------------------------

    def _ranked_token_ids(self, index: FeatureIndex) -> list[int]:
        model = self.exec_model()
        if model is None:
            return []
        scores, matched = index.candidate_scores(model)
        if self.pool_docs is not None and self.rank_within_pool:
            doc_ok = np.isin(
                index.sent_doc_order, np.fromiter(self.pool_docs, dtype=np.int32)
            )
            matched &= doc_ok[index.tok_sentence]
        ids = np.nonzero(matched)[0]
        if ids.size == 0:
            return []
        order = np.lexsort((ids, -scores[ids]))
        return ids[order].tolist()

    def ranking(self, index: FeatureIndex) -> list[RankedToken]:
        """Current full-token ranking (candidates only), as the user's
        entity-listing product. Empty until a model exists."""
        return [
            RankedToken(t, index.surfaces[t]) for t in self._ranked_token_ids(index)
        ]

    def deduped_ranking(self, index: FeatureIndex) -> list[RankedToken]:
        """ranking() with repeated normalized surfaces already removed.

        Exactly dedup_ranking(self.ranking(index)), but using the index's
        memoized normalized surfaces; uAP over this list equals uAP over
        the full ranking because its dedup pass is idempotent.
        """
        norms = index.norm_surfaces
        surfaces = index.surfaces
        seen: set[str] = set()
        kept = []
        for t in self._ranked_token_ids(index):
            key = norms[t]
            if key and key not in seen:
                seen.add(key)
                kept.append(RankedToken(t, surfaces[t]))
        return kept

    def entity_list(self, index: FeatureIndex, limit: int) -> list[str]:
        """Top-ranked distinct normalized surface forms."""
        if self.model is None:
            raise SessionError("no model trained yet")
        if limit < 1:
            raise ValueError("limit must be >= 1")
        kept = self.deduped_ranking(index)
        return [normalize_surface(item.surface) for item in kept[:limit]]

    # -- persistence -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "class_name": self.class_name,
            "strategy": self.strategy,
            "seed": self.seed,
            "seed_terms": list(self.seed_terms),
            "seed_sentences": list(self.seed_sentences),
            "pool_docs": sorted(self.pool_docs) if self.pool_docs is not None else None,
            "doc_ranking": list(self.doc_ranking) if self.doc_ranking is not None else None,
            "prune_to": self.prune_to,
            "retrain_every": self.retrain_every,
            "rank_within_pool": self.rank_within_pool,
            "hp": self.hp.to_json(),
            "labeled_sentences": [[sid, list(labs)] for sid, labs in self.labeled_sentences],
            "model": None
            if self.model is None
            else {
                "class_name": self.model.class_name,
                "weights": self.model.weights,
                "bias": self.model.bias,
                "trained_on": self.model.trained_on,
                "meta": self.model.meta,
            },
            "pending": self.pending,
            "round": self.round,
            "exclude": sorted(self.exclude),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Session":
        model = None
        if data["model"] is not None:
            m = data["model"]
            model = QueryModel(
                class_name=m["class_name"],
                weights={k: float(v) for k, v in m["weights"].items()},
                bias=float(m["bias"]),
                trained_on=int(m["trained_on"]),
                meta=m["meta"],
            )
        return cls(
            session_id=data["session_id"],
            class_name=data["class_name"],
            strategy=data["strategy"],
            seed=int(data["seed"]),
            seed_terms=tuple(data["seed_terms"]),
            seed_sentences=tuple(data["seed_sentences"]),
            pool_docs=None if data["pool_docs"] is None else frozenset(data["pool_docs"]),
            doc_ranking=None if data["doc_ranking"] is None else tuple(data["doc_ranking"]),
            prune_to=data["prune_to"],
            retrain_every=data["retrain_every"],
            rank_within_pool=data["rank_within_pool"],
            hp=TrainConfig(**data["hp"]),
            labeled_sentences=[(sid, tuple(labs)) for sid, labs in data["labeled_sentences"]],
            model=model,
            pending=data["pending"],
            round=data["round"],
            exclude=set(data["exclude"]),
        )


def read_doc_rankings(path) -> dict[str, list[str]]:
    """Read ``query_id<TAB>doc_id<TAB>rank`` lines into per-query doc-id
    lists ordered by ascending rank."""
    from pathlib import Path

    from .errors import ParseError

    rows: dict[str, list[tuple[int, str]]] = {}
    path = Path(path)
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
            try:
                rank = int(cols[2])
            except ValueError as exc:
                raise ParseError(f"bad rank {cols[2]!r}", path=path, line=lineno) from exc
            rows.setdefault(cols[0], []).append((rank, cols[1]))
    return {
        qid: [doc for _rank, doc in sorted(pairs)] for qid, pairs in rows.items()
    }


def run_simulation(
    index: FeatureIndex,
    user: SimulatedUser,
    judgments: JudgmentSet,
    strategy: str,
    rounds: int,
    seed: int,
    pool_docs: frozenset[int] | None = None,
    doc_ranking: tuple[int, ...] | None = None,
    prune_to: int | None = None,
    hp: TrainConfig = TrainConfig(),
) -> LearningCurve:
    """Replay gold labels for `rounds` sentences and record uAP per round."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    session = Session(
        session_id=f"sim-{judgments.query_id}-{strategy}-{seed}",
        class_name=user.class_name,
        strategy=strategy,
        seed=seed,
        seed_sentences=user.positive_sentences(index.corpus),
        pool_docs=pool_docs,
        doc_ranking=doc_ranking,
        prune_to=prune_to,
        hp=hp,
    )
    uaps = []
    for _ in range(rounds):
        try:
            sid, _scores = session.next_sentence(index)
        except SessionComplete:
            break
        labels = user.labels_for(index.corpus.sentence(sid))
        session.submit_labels(index, sid, labels)
        ranking = session.deduped_ranking(index)
        uaps.append(unique_ap(ranking, judgments) if ranking else 0.0)
    return LearningCurve(
        strategy=strategy,
        query_id=judgments.query_id,
        seed=seed,
        uap_by_round=tuple(uaps),
    )
