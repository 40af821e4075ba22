import math
import random

import numpy as np
import pytest

from convkg.arbiter import (
    AdaBoostModel,
    ArbiterError,
    N_FEATURES,
    Stump,
    arbitrate,
    extract_features,
    load_model,
    save_model,
    score,
    train_adaboost,
)
from convkg.kb import Value
from convkg.nlu import analyze
from convkg.reasoning import QAResult, SOURCE_REASONING, SOURCE_SEARCH


def vec(x: float, label=None, n=N_FEATURES):
    """1-D problem embedded in the fixed feature space (feature 0 varies)."""
    v = [0.0] * n
    v[0] = x
    return v


def exp_loss(model: AdaBoostModel, X, y):
    """Reference exponential loss, computed from first principles."""
    total = 0.0
    for xi, yi in zip(X, y):
        F = sum(s.alpha * s.predict(xi) for s in model.stumps)
        total += math.exp(-yi * F)
    return total / len(X)


# -- training ------------------------------------------------------------------


def test_separable_1d_trains_in_one_round():
    samples = [(vec(0.0), -1), (vec(1.0), +1)]
    model = train_adaboost(samples, rounds=5)
    assert len(model.stumps) == 1
    preds = [1 if score(model, v) > 0.5 else -1 for v, _ in samples]
    assert preds == [-1, +1]


def test_alpha_closed_form_quarter_error():
    eps = 0.25
    alpha = 0.5 * math.log((1 - eps) / eps)
    assert alpha == pytest.approx(0.5 * math.log(3), abs=1e-12)
    # inseparable 4-point set where the best stump misclassifies exactly one
    # sample: first-round weighted error is 1/4, so alpha must equal .5*ln(3)
    noisy = [
        (vec(0.0), -1),
        (vec(1.0), -1),
        (vec(2.0), +1),
        (vec(3.0), -1),  # inseparable point beyond the positives
    ]
    model = train_adaboost(noisy, rounds=1)
    assert model.stumps[0].alpha == pytest.approx(0.5 * math.log(3), abs=1e-12)


def test_single_class_input_rejected():
    with pytest.raises(ArbiterError):
        train_adaboost([(vec(0.0), 1), (vec(1.0), 1)], rounds=3)


def test_too_few_samples_rejected():
    with pytest.raises(ArbiterError):
        train_adaboost([(vec(0.0), 1)], rounds=3)


def test_exponential_loss_non_increasing_xor_like():
    rng = random.Random(7)
    samples = []
    for _ in range(40):
        a, b = rng.random(), rng.random()
        label = 1 if (a > 0.5) != (b > 0.5) else -1
        v = [0.0] * N_FEATURES
        v[0], v[1] = a, b
        samples.append((v, label))
    X = [s[0] for s in samples]
    y = [s[1] for s in samples]
    losses = []
    for t in range(1, 11):
        model = train_adaboost(samples, rounds=t)
        losses.append(exp_loss(model, X, y))
    for earlier, later in zip(losses, losses[1:]):
        assert later <= earlier + 1e-12


def test_training_error_of_chosen_stumps_below_half():
    rng = random.Random(3)
    samples = []
    for _ in range(30):
        v = [rng.random() for _ in range(N_FEATURES)]
        samples.append((v, 1 if v[2] + 0.3 * rng.random() > 0.6 else -1))
    model = train_adaboost(samples, rounds=12)
    # replay the boosting loop to recover per-round weighted errors
    X = np.array([s[0] for s in samples])
    y = np.array([s[1] for s in samples], dtype=float)
    w = np.full(len(y), 1.0 / len(y))
    for stump in model.stumps:
        h = stump.predict_many(X)
        err = w[(h != y)].sum()
        assert err < 0.5
        w = w * np.exp(-stump.alpha * y * h)
        w /= w.sum()


# -- scoring -------------------------------------------------------------------


def _flat_model(alphas):
    return AdaBoostModel(
        stumps=[Stump(feature=0, threshold=0.5, polarity=1, alpha=a) for a in alphas],
        rounds=len(alphas),
    )


def test_zero_margin_is_half():
    model = AdaBoostModel(
        stumps=[
            Stump(feature=0, threshold=0.5, polarity=1, alpha=1.0),
            Stump(feature=0, threshold=0.5, polarity=-1, alpha=1.0),
        ],
        rounds=2,
    )
    assert score(model, vec(1.0)) == pytest.approx(0.5)


def test_all_agree_positive_is_one():
    model = _flat_model([0.7, 0.3, 1.1])
    assert score(model, vec(1.0)) == pytest.approx(1.0)
    assert score(model, vec(0.0)) == pytest.approx(0.0)


def test_failed_flag_forces_zero():
    model = _flat_model([1.0])
    v = vec(1.0)
    v[N_FEATURES - 1] = 1.0  # failed_flag
    assert score(model, v) == 0.0


def test_empty_model_errors():
    with pytest.raises(ArbiterError):
        score(AdaBoostModel(), vec(1.0))


def test_margin_normalization_duplication_invariant():
    rng = random.Random(11)
    base = _flat_model([0.9, 0.4])
    doubled = AdaBoostModel(
        stumps=[Stump(s.feature, s.threshold, s.polarity, s.alpha / 2) for s in base.stumps] * 2,
        rounds=4,
    )
    for _ in range(20):
        v = [rng.uniform(-2, 2) for _ in range(N_FEATURES)]
        v[N_FEATURES - 1] = 0.0
        assert score(base, v) == pytest.approx(score(doubled, v), abs=1e-12)


# -- arbitration ---------------------------------------------------------------


def _result(source, values, failed=False, features=None):
    r = QAResult(source=source, values=values, failed=failed)
    r.features = features or [0.0] * N_FEATURES
    if failed:
        r.features[N_FEATURES - 1] = 1.0
    else:
        r.features[0] = float(len(values))
    return r


def test_higher_confidence_wins():
    model = _flat_model([1.0])  # confidence 1.0 iff n_values > 0.5
    r1 = _result(SOURCE_REASONING, [Value.entity("Q_A")])
    r2 = _result(SOURCE_SEARCH, [])
    r2.features[0] = 0.0
    answer = arbitrate(r1, r2, model)
    assert answer.source == SOURCE_REASONING
    assert answer.confidence == pytest.approx(1.0)


def test_both_failed_clarifies():
    model = _flat_model([1.0])
    answer = arbitrate(
        _result(SOURCE_REASONING, [], failed=True),
        _result(SOURCE_SEARCH, [], failed=True),
        model,
    )
    assert answer.source == "NONE"
    assert answer.confidence == 0.0
    assert answer.clarification


def test_tie_goes_to_reasoning():
    model = _flat_model([1.0])
    r1 = _result(SOURCE_REASONING, [Value.entity("Q_A")])
    r2 = _result(SOURCE_SEARCH, [Value.entity("Q_B")])
    answer = arbitrate(r1, r2, model)
    assert answer.source == SOURCE_REASONING
    answer_swapped = arbitrate(r2, r1, model)
    assert answer_swapped.source == SOURCE_REASONING


def test_single_surviving_backend_always_wins():
    # even when its confidence scores 0, a live result beats a failed one
    model = _flat_model([1.0])
    live = _result(SOURCE_SEARCH, [Value.entity("Q_B")])
    live.features[0] = 0.0  # stump votes negative -> confidence 0
    dead = _result(SOURCE_REASONING, [], failed=True)
    answer = arbitrate(dead, live, model)
    assert answer.source == SOURCE_SEARCH
    answer = arbitrate(live, dead, model)
    assert answer.source == SOURCE_SEARCH


def test_arbitrate_symmetry_up_to_tiebreak():
    model = _flat_model([1.0])
    r1 = _result(SOURCE_REASONING, [Value.entity("Q_A")])
    r2 = _result(SOURCE_SEARCH, [])
    r2.features[0] = 0.0
    a = arbitrate(r1, r2, model)
    b = arbitrate(r2, r1, model)
    assert a.values == b.values and a.source == b.source


# -- features ------------------------------------------------------------------


def test_extract_features_shape_and_finiteness(kb, lexicon):
    frame = analyze("Who is the father of Michael Jackson?", kb, lexicon)
    ok = QAResult(
        source=SOURCE_REASONING,
        values=[Value.entity("Q_JosephJackson")],
        provenance=set(kb.match(s="Q_MichaelJackson", p="P_father")),
        rule_priority=32,
    )
    failed = QAResult.failure(SOURCE_SEARCH)
    for result in (ok, failed):
        feats = extract_features(result, frame, kb)
        assert len(feats) == N_FEATURES
        assert all(math.isfinite(f) for f in feats)
    assert extract_features(ok, frame, kb)[8] == 0.0
    assert extract_features(failed, frame, kb)[8] == 1.0
    assert extract_features(failed, frame, kb)[9] == 1.0


# -- model file ------------------------------------------------------------------


def test_model_roundtrip_exact(tmp_path):
    rng = random.Random(5)
    samples = []
    for _ in range(50):
        v = [rng.random() for _ in range(N_FEATURES)]
        samples.append((v, 1 if v[3] > 0.5 else -1))
    model = train_adaboost(samples, rounds=8)
    path = tmp_path / "m.model"
    save_model(model, str(path))
    loaded = load_model(str(path))
    assert loaded.rounds == model.rounds
    assert loaded.stumps == model.stumps
    for v, _ in samples:
        assert score(loaded, v) == score(model, v)


def test_model_file_rejects_bad_dimension(tmp_path):
    path = tmp_path / "m.model"
    path.write_text("ADABOOST v1 rounds=1\n99 0.5 1 1.0\n")
    with pytest.raises(ArbiterError, match="out of range"):
        load_model(str(path))


def test_model_file_rejects_bad_header(tmp_path):
    path = tmp_path / "m.model"
    path.write_text("BOOST v2\n")
    with pytest.raises(ArbiterError):
        load_model(str(path))
