import pytest
from hypothesis import given
from hypothesis import strategies as st

from entityscout.corpus import Sentence, Token
from entityscout.errors import ConfigError, ParseError
from entityscout.features import (
    FAMILY_PREFIXES,
    ClusterMap,
    FeatureConfig,
    extract,
    feature_family,
    load_clusters,
    word_shape,
)


def sent(*surfaces, pos=None):
    toks = tuple(
        Token(surface=s, pos_tag=pos[i] if pos else None)
        for i, s in enumerate(surfaces)
    )
    return Sentence(sentence_id=0, tokens=toks)


def test_word_shape():
    assert word_shape("London") == "Xx"
    assert word_shape("RWJ-270201") == "X-d"
    assert word_shape("ALH84001") == "Xd"
    assert word_shape("") == ""
    assert word_shape("iPhone7s") == "xXxdx"
    assert word_shape("..") == "."


def test_extract_full_bag():
    cfg = FeatureConfig(window=1, ngram_max=3, enabled_families=frozenset({"words", "shapes", "ngrams"}))
    got = extract(sent("Visit", "London", "now"), 1, cfg)
    assert got == {
        "w[0]=london",
        "w[-1]=visit",
        "w[+1]=now",
        "shape[0]=Xx",
        "shape[-1]=Xx",
        "shape[+1]=x",
        "pre=l",
        "pre=lo",
        "pre=lon",
        "suf=n",
        "suf=on",
        "suf=don",
    }


def test_extract_boundary_sentinels():
    cfg = FeatureConfig(window=1, ngram_max=2)
    got = extract(sent("Hi"), 0, cfg)
    assert "w[-1]=<S>" in got
    assert "w[+1]=</S>" in got
    # only the word family emits sentinels
    assert not any(f.startswith("shape[-1]") or f.startswith("shape[+1]") for f in got)


def test_extract_shape_collapses():
    cfg = FeatureConfig(window=0, ngram_max=1, enabled_families=frozenset({"shapes"}))
    got = extract(sent("ALH84001"), 0, cfg)
    assert got == {"shape[0]=Xd"}


def test_extract_pos_only_when_present():
    cfg = FeatureConfig(window=1, enabled_families=frozenset({"pos"}))
    got = extract(sent("A", "b", pos=["DT", "NN"]), 0, cfg)
    assert got == {"pos[0]=DT", "pos[+1]=NN"}
    got = extract(sent("A", "b"), 0, cfg)
    assert got == set()


def test_extract_position_out_of_range():
    cfg = FeatureConfig()
    with pytest.raises(IndexError):
        extract(sent("one"), 1, cfg)


def test_extract_clusters():
    cfg = FeatureConfig(
        window=1,
        enabled_families=frozenset({"clusters"}),
        cluster_prefix_lengths=(2, 4),
    )
    clusters = ClusterMap({"london": "0110", "visit": "10"})
    got = extract(sent("Visit", "London", "now"), 1, cfg, clusters)
    # case-folded fallback finds both; "now" has no cluster, emits nothing
    assert got == {
        "cl[0][2]=01",
        "cl[0][4]=0110",
        "cl[-1][2]=10",
        "cl[-1][4]=10",
    }


def test_extract_clusters_requires_map():
    cfg = FeatureConfig(enabled_families=frozenset({"clusters"}))
    with pytest.raises(ConfigError):
        extract(sent("a"), 0, cfg)


def test_family_closure():
    base = frozenset({"words", "shapes", "ngrams"})
    cfg_all = FeatureConfig(window=2, ngram_max=3, enabled_families=base)
    cfg_no_ngrams = FeatureConfig(window=2, ngram_max=3, enabled_families=base - {"ngrams"})
    s = sent("Visit", "London", "now", "please")
    for pos in range(4):
        full = extract(s, pos, cfg_all)
        reduced = extract(s, pos, cfg_no_ngrams)
        dropped = full - reduced
        assert reduced <= full
        assert all(f.startswith(FAMILY_PREFIXES["ngrams"]) for f in dropped)
        assert full - {f for f in full if f.startswith(FAMILY_PREFIXES["ngrams"])} == reduced


def test_locality_outside_window():
    cfg = FeatureConfig(window=1, ngram_max=2)
    a = sent("far", "away", "Visit", "London", "now")
    b = sent("completely", "different", "Visit", "London", "now")
    assert extract(a, 3, cfg) == extract(b, 3, cfg)


@given(st.text(alphabet=st.characters(max_codepoint=0x2FF), max_size=12))
def test_word_shape_idempotent_alphabet(s):
    shape = word_shape(s)
    # collapsed: no two adjacent identical symbols
    assert all(shape[i] != shape[i + 1] for i in range(len(shape) - 1))


def test_feature_family():
    assert feature_family("w[-1]=visit") == "w"
    assert feature_family("suf=on") == "suf"
    assert feature_family("cl[0][4]=0110") == "cl"
    assert feature_family("shape[+1]=Xx") == "shape"


def test_config_validation():
    with pytest.raises(ConfigError):
        FeatureConfig(window=-1)
    with pytest.raises(ConfigError):
        FeatureConfig(ngram_max=0)
    with pytest.raises(ConfigError):
        FeatureConfig(enabled_families=frozenset({"wat"}))


def test_config_json_round_trip():
    cfg = FeatureConfig(window=3, ngram_max=2, cluster_path="x.paths")
    assert FeatureConfig.from_json(cfg.to_json()) == cfg


def test_load_clusters(tmp_path):
    path = tmp_path / "paths.tsv"
    path.write_text("0110\tlondon\t421\n10\tvisit\t7\n0110\tLondon\t3\n")
    cm = load_clusters(path)
    assert cm.get("london") == "0110"
    assert cm.get("London") == "0110"  # exact hit
    assert cm.get("VISIT") == "10"  # folded fallback
    assert cm.get("absent") is None


def test_load_clusters_malformed(tmp_path):
    path = tmp_path / "paths.tsv"
    path.write_text("0110\tlondon\t421\nnot-a-bitstring\tword\t3\n")
    with pytest.raises(ParseError) as exc:
        load_clusters(path)
    assert exc.value.line == 2
