"""Per-token handcrafted feature extraction.

Every token becomes a bag of binary string features ("family=value").
Extraction is a pure function of (sentence, position, config, clusters),
so it can run data-parallel across sentences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .corpus import Sentence
from .errors import ConfigError, ParseError

# A feature vector is a plain set of feature strings; all weights are 1.
FeatureVector = frozenset[str]

# family name -> feature-string prefixes it owns
FAMILY_PREFIXES: dict[str, tuple[str, ...]] = {
    "words": ("w[",),
    "shapes": ("shape[",),
    "ngrams": ("pre=", "suf="),
    "pos": ("pos[",),
    "clusters": ("cl[",),
}

DEFAULT_FAMILIES = frozenset({"words", "shapes", "ngrams", "pos"})

SENT_START = "<S>"
SENT_END = "</S>"


def feature_family(feature: str) -> str:
    """Short family tag of a feature string: "w[-1]=visit" -> "w"."""
    for i, ch in enumerate(feature):
        if ch in "[=":
            return feature[:i]
    return feature


@dataclass(frozen=True)
class FeatureConfig:
    window: int = 2
    ngram_max: int = 4
    enabled_families: frozenset[str] = DEFAULT_FAMILIES
    cluster_path: str | None = None
    cluster_prefix_lengths: tuple[int, ...] = (4, 6, 10, 20)

    def __post_init__(self):
        if self.window < 0:
            raise ConfigError("window must be >= 0")
        if self.ngram_max < 1:
            raise ConfigError("ngram_max must be >= 1")
        unknown = set(self.enabled_families) - set(FAMILY_PREFIXES)
        if unknown:
            raise ConfigError(f"unknown feature families: {sorted(unknown)}")
        if any(n < 1 for n in self.cluster_prefix_lengths):
            raise ConfigError("cluster prefix lengths must be >= 1")

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "ngram_max": self.ngram_max,
            "enabled_families": sorted(self.enabled_families),
            "cluster_path": self.cluster_path,
            "cluster_prefix_lengths": list(self.cluster_prefix_lengths),
        }

    @classmethod
    def from_json(cls, data: dict) -> "FeatureConfig":
        return cls(
            window=data["window"],
            ngram_max=data["ngram_max"],
            enabled_families=frozenset(data["enabled_families"]),
            cluster_path=data.get("cluster_path"),
            cluster_prefix_lengths=tuple(data["cluster_prefix_lengths"]),
        )


class ClusterMap:
    """Word -> hierarchical-cluster bitstring, with a case-folded fallback."""

    def __init__(self, paths: dict[str, str]):
        self._exact = dict(paths)
        self._folded: dict[str, str] = {}
        for word, bits in paths.items():
            self._folded[word.casefold()] = bits

    def get(self, word: str) -> str | None:
        hit = self._exact.get(word)
        if hit is not None:
            return hit
        return self._folded.get(word.casefold())

    def __len__(self):
        return len(self._exact)


def load_clusters(path: str | Path) -> ClusterMap:
    """Read a ``bitstring<TAB>word<TAB>count`` paths file."""
    path = Path(path)
    paths: dict[str, str] = {}
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
            bits, word, _count = cols
            if bits.strip("01"):
                raise ParseError(f"bad bitstring {bits!r}", path=path, line=lineno)
            paths[word] = bits  # later duplicates overwrite
    return ClusterMap(paths)


@lru_cache(maxsize=200_000)
def word_shape(s: str) -> str:
    """Character-class abstraction: upper->X, lower->x, digit->d, other kept;
    maximal runs of one symbol collapse to a single symbol."""
    out = []
    prev = None
    for ch in s:
        if ch.isupper():
            sym = "X"
        elif ch.islower():
            sym = "x"
        elif ch.isdigit():
            sym = "d"
        else:
            sym = ch
        if sym != prev:
            out.append(sym)
            prev = sym
    return "".join(out)


def _off(k: int) -> str:
    return "0" if k == 0 else f"{k:+d}"


def extract(
    sentence: Sentence,
    position: int,
    cfg: FeatureConfig,
    clusters: ClusterMap | None = None,
) -> FeatureVector:
    """Feature bag for one token position. See FAMILY_PREFIXES for the
    inventory; offsets run -window..+window with <S>/</S> word sentinels."""
    tokens = sentence.tokens
    n = len(tokens)
    if not 0 <= position < n:
        raise IndexError(f"position {position} out of range for {n} tokens")
    fams = cfg.enabled_families
    if "clusters" in fams and clusters is None:
        raise ConfigError("clusters family enabled but no cluster map given")

    feats: set[str] = set()
    for k in range(-cfg.window, cfg.window + 1):
        i = position + k
        off = _off(k)
        if i < 0:
            if "words" in fams:
                feats.add(f"w[{off}]={SENT_START}")
            continue
        if i >= n:
            if "words" in fams:
                feats.add(f"w[{off}]={SENT_END}")
            continue
        tok = tokens[i]
        if "words" in fams:
            feats.add(f"w[{off}]={tok.surface.lower()}")
        if "shapes" in fams:
            feats.add(f"shape[{off}]={word_shape(tok.surface)}")
        if "pos" in fams and tok.pos_tag is not None:
            feats.add(f"pos[{off}]={tok.pos_tag}")
        if "clusters" in fams:
            bits = clusters.get(tok.surface)
            if bits is not None:
                for length in cfg.cluster_prefix_lengths:
                    feats.add(f"cl[{off}][{length}]={bits[:length]}")

    if "ngrams" in fams:
        word = tokens[position].surface.lower()
        top = min(cfg.ngram_max, len(word))
        for length in range(1, top + 1):
            feats.add(f"pre={word[:length]}")
            feats.add(f"suf={word[-length:]}")

    return frozenset(feats)
