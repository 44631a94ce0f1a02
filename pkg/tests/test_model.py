import math

import numpy as np
import pytest

from entityscout.errors import ModelFormatError, SingleClassError, TrainingError
from entityscout.model import (
    LabeledToken,
    QueryModel,
    TrainConfig,
    feature_importance,
    load_model,
    prune,
    save_model,
    train,
    uncertainty,
)


def lt(tid, feats, label):
    return LabeledToken(token_id=tid, feature_vector=frozenset(feats), label=label)


def score_of(model, feats):
    return model.score(frozenset(feats))


@pytest.fixture(scope="module")
def separable_data():
    # positives all carry suf=ia, negatives never do; shared noise features
    rng = np.random.default_rng(3)
    data = []
    for i in range(30):
        noise = {f"w[0]=bg{rng.integers(0, 10)}"}
        if i % 3 == 0:
            data.append(lt(i, {"suf=ia", "shape[0]=Xx"} | noise, True))
        else:
            data.append(lt(i, {"shape[0]=x"} | noise, False))
    return data


def test_train_separable_orders_positives_first(separable_data):
    model = train(separable_data, class_name="ENT")
    assert model.weights["suf=ia"] > 0
    pos_scores = [score_of(model, ex.feature_vector) for ex in separable_data if ex.label]
    neg_scores = [score_of(model, ex.feature_vector) for ex in separable_data if not ex.label]
    assert min(pos_scores) > max(neg_scores)
    assert model.trained_on == len(separable_data)


def test_train_duplicated_data_same_ranking(separable_data):
    base = train(separable_data, class_name="ENT")
    doubled = train(separable_data * 2, class_name="ENT")
    vectors = [ex.feature_vector for ex in separable_data]
    order_a = sorted(range(len(vectors)), key=lambda i: -score_of(base, vectors[i]))
    order_b = sorted(range(len(vectors)), key=lambda i: -score_of(doubled, vectors[i]))
    assert order_a == order_b


def test_train_decoupled_signs():
    data = [lt(0, {"pos-only"}, True), lt(1, {"neg-only"}, False)]
    model = train(data)
    assert model.weights["pos-only"] > 0
    assert model.weights["neg-only"] < 0


def test_train_single_class_errors():
    with pytest.raises(SingleClassError):
        train([lt(0, {"a"}, True), lt(1, {"b"}, True)])
    with pytest.raises(TrainingError):
        train([])


def test_train_deterministic(separable_data):
    a = train(separable_data)
    b = train(separable_data)
    assert set(a.weights) == set(b.weights)
    for f in a.weights:
        assert abs(a.weights[f] - b.weights[f]) <= 1e-9
    assert abs(a.bias - b.bias) <= 1e-9


def test_scale_invariance_of_ranking(separable_data):
    model = train(separable_data)
    # powers of two scale float weights exactly, preserving ties too
    scaled = QueryModel(
        class_name=model.class_name,
        weights={f: w * 4.0 for f, w in model.weights.items()},
        bias=model.bias,
    )
    vectors = [ex.feature_vector for ex in separable_data]
    for fv in vectors:
        assert score_of(scaled, fv) == 4.0 * score_of(model, fv)
    key_a = sorted(range(len(vectors)), key=lambda i: (-score_of(model, vectors[i]), i))
    key_b = sorted(range(len(vectors)), key=lambda i: (-score_of(scaled, vectors[i]), i))
    assert key_a == key_b


def test_prune():
    m = QueryModel(class_name="x", weights={"a": 3.0, "b": -2.0, "c": 0.1})
    assert prune(m, 2).weights == {"a": 3.0, "b": -2.0}
    assert prune(m, 3) is m
    assert prune(m, 100).weights == m.weights


def test_prune_nesting():
    rng = np.random.default_rng(5)
    weights = {f"f{i}": float(w) for i, w in enumerate(rng.normal(size=500)) if w != 0}
    m = QueryModel(class_name="x", weights=weights)
    assert prune(prune(m, 100), 10).weights == prune(m, 10).weights


def test_prune_tie_breaks_by_feature_name():
    m = QueryModel(class_name="x", weights={"b": 1.0, "a": -1.0, "c": 1.0})
    assert set(prune(m, 2).weights) == {"a", "b"}


def test_pruned_scores_use_only_surviving_features():
    m = QueryModel(class_name="x", weights={"big": 5.0, "small": 0.01})
    pruned = prune(m, 1)
    assert score_of(pruned, {"small"}) == 0.0
    assert score_of(pruned, {"big", "small"}) == 5.0


def test_uncertainty():
    m = QueryModel(class_name="x", weights={"a": 2.0}, bias=0.0)
    assert uncertainty(m, frozenset()) == 0.0
    assert uncertainty(m, frozenset({"a"})) == -2.0
    m2 = QueryModel(class_name="x", weights={"a": 2.0, "b": -2.0}, bias=0.0)
    assert uncertainty(m2, frozenset({"b"})) == -2.0  # symmetric around 0


def test_uncertainty_ranking_matches_abs_score_sort():
    rng = np.random.default_rng(9)
    m = QueryModel(
        class_name="x",
        weights={f"f{i}": float(rng.normal()) for i in range(8)},
        bias=0.0,
    )
    vectors = [
        frozenset({f"f{i}" for i in rng.choice(8, size=rng.integers(0, 5), replace=False)})
        for _ in range(40)
    ]
    by_uncertainty = sorted(range(40), key=lambda i: (-uncertainty(m, vectors[i]), i))
    by_abs = sorted(range(40), key=lambda i: (abs(score_of(m, vectors[i])), i))
    assert by_uncertainty == by_abs


def test_feature_importance_single_model():
    weights = {f"suf=x{i}": 1.0 + i / 100 for i in range(10)}
    m = QueryModel(class_name="x", weights=weights)
    assert feature_importance([(m, 0.5)]) == [("suf", 5.0)]


def test_feature_importance_doubling_and_order():
    m1 = QueryModel(
        class_name="x",
        weights={**{f"suf=a{i}": 2.0 for i in range(7)}, **{f"w[0]=b{i}": 1.0 for i in range(3)}},
    )
    once = feature_importance([(m1, 0.4)])
    twice = feature_importance([(m1, 0.4), (m1, 0.4)])
    assert [fam for fam, _ in once] == [fam for fam, _ in twice] == ["suf", "w"]
    assert dict(twice)["suf"] == pytest.approx(2 * dict(once)["suf"])


def test_feature_importance_dominant_family_first():
    rng = np.random.default_rng(1)
    models = []
    for _ in range(5):
        weights = {f"pre=p{i}": 5.0 + float(rng.random()) for i in range(8)}
        weights.update({f"shape[0]=s{i}": 1.0 for i in range(4)})
        models.append((QueryModel(class_name="x", weights=weights), 0.7))
    ranked = feature_importance(models)
    assert ranked[0][0] == "pre"


def test_feature_importance_empty():
    with pytest.raises(ValueError):
        feature_importance([])


def test_save_load_round_trip(tmp_path, separable_data):
    model = train(separable_data, class_name="ENT")
    path = tmp_path / "m.model"
    save_model(model, path)
    again = load_model(path)
    assert again.class_name == model.class_name
    assert again.weights == model.weights
    assert again.bias == model.bias
    assert again.trained_on == model.trained_on
    assert again.meta == model.meta


def test_zero_weight_dropped_on_load(tmp_path):
    path = tmp_path / "m.model"
    save_model(QueryModel(class_name="x", weights={"a": 1.0}), path)
    text = path.read_text() + "b\t-0.0\n"
    path.write_text(text)
    assert "b" not in load_model(path).weights


def test_load_rejects_nan_and_bad_version(tmp_path):
    path = tmp_path / "m.model"
    save_model(QueryModel(class_name="x", weights={"a": 1.0}), path)
    path.write_text(path.read_text() + "b\tnan\n")
    with pytest.raises(ModelFormatError):
        load_model(path)
    path.write_text("entityscout-model\t999\nclass\tx\n--\n")
    with pytest.raises(ModelFormatError):
        load_model(path)
    path.write_text("something else entirely\n")
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_query_model_rejects_nonfinite_and_zero():
    with pytest.raises(ModelFormatError):
        QueryModel(class_name="x", weights={"a": math.inf})
    with pytest.raises(ModelFormatError):
        QueryModel(class_name="x", weights={"a": 0.0})
