"""Answer arbitration: stump-boosting confidence model over QA result features.

Discrete AdaBoost with decision stumps; confidence is the normalized voting
margin mapped to [0, 1]. The dialogue manager keeps whichever backend scores
higher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kb import KnowledgeBase, Triple, Value
from .nlu import QuestionFrame
from .reasoning import QAResult, SOURCE_REASONING

SOURCE_NONE = "NONE"

FEATURE_NAMES = (
    "n_values",
    "n_provenance",
    "coverage",
    "relevance",
    "rule_priority",
    "n_question_tokens",
    "n_mentions",
    "answer_pagerank_max",
    "source_flag",
    "failed_flag",
)
N_FEATURES = len(FEATURE_NAMES)
_FAILED_FLAG = FEATURE_NAMES.index("failed_flag")


class ArbiterError(Exception):
    """Bad training input or unusable model."""


def extract_features(result: QAResult, frame: QuestionFrame, kb: KnowledgeBase) -> list[float]:
    """Fixed-order 10-feature vector; finite for failed results too."""
    pagerank_max = 0.0
    for v in result.values:
        if v.is_entity and v.text in kb.entities:
            pagerank_max = max(pagerank_max, kb.entities[v.text].pagerank)
    vec = [
        float(len(result.values)),
        float(len(result.provenance)),
        float(result.coverage),
        float(result.relevance),
        float(result.rule_priority if result.source == SOURCE_REASONING else -1),
        float(len(frame.raw_tokens)),
        float(len(frame.mentions)),
        pagerank_max,
        0.0 if result.source == SOURCE_REASONING else 1.0,
        1.0 if result.failed else 0.0,
    ]
    assert len(vec) == N_FEATURES
    return vec


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    polarity: int  # +1: predict +1 above threshold; -1: predict +1 below
    alpha: float

    def predict(self, x: "np.ndarray | list[float]") -> int:
        value = x[self.feature]
        return self.polarity if value > self.threshold else -self.polarity

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        out = np.where(X[:, self.feature] > self.threshold, self.polarity, -self.polarity)
        return out.astype(np.float64)


@dataclass
class AdaBoostModel:
    stumps: list[Stump] = field(default_factory=list)
    rounds: int = 0


_EPS_LO = 1e-10
_EPS_HI = 1.0 - 1e-10


def train_adaboost(samples: list[tuple[list[float], int]], rounds: int) -> AdaBoostModel:
    """Standard discrete AdaBoost over decision stumps.

    Thresholds are taken at midpoints between consecutive sorted feature
    values (exhaustive, deterministic). Training stops early if no stump
    beats chance.
    """
    if len(samples) < 2:
        raise ArbiterError("need at least 2 training samples")
    X = np.asarray([s[0] for s in samples], dtype=np.float64)
    y = np.asarray([s[1] for s in samples], dtype=np.float64)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ArbiterError("training data must contain both labels")
    if X.shape[1] != N_FEATURES:
        raise ArbiterError(f"feature vectors must have {N_FEATURES} dimensions")
    n = len(y)
    w = np.full(n, 1.0 / n)

    # precompute candidate thresholds per feature
    candidates: list[np.ndarray] = []
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        if len(vals) < 2:
            candidates.append(np.empty(0))
        else:
            candidates.append((vals[:-1] + vals[1:]) / 2.0)

    stumps: list[Stump] = []
    for _ in range(rounds):
        best: tuple[float, int, float, int] | None = None  # (error, feature, threshold, polarity)
        for f in range(X.shape[1]):
            thresholds = candidates[f]
            if len(thresholds) == 0:
                continue
            preds = np.where(X[:, f][None, :] > thresholds[:, None], 1.0, -1.0)
            err_pos = ((preds != y[None, :]) * w[None, :]).sum(axis=1)
            for t_idx, threshold in enumerate(thresholds):
                for polarity, err in ((1, err_pos[t_idx]), (-1, 1.0 - err_pos[t_idx])):
                    if best is None or err < best[0] - 1e-15:
                        best = (float(err), f, float(threshold), polarity)
        if best is None or best[0] >= 0.5:
            break
        err, f, threshold, polarity = best
        eps = min(max(err, _EPS_LO), _EPS_HI)
        alpha = 0.5 * math.log((1.0 - eps) / eps)
        stump = Stump(feature=f, threshold=threshold, polarity=polarity, alpha=alpha)
        h = stump.predict_many(X)
        w = w * np.exp(-alpha * y * h)
        w = w / w.sum()
        stumps.append(stump)
        if err <= 0.0:
            break  # perfectly separated; further rounds would repeat this stump
    return AdaBoostModel(stumps=stumps, rounds=rounds)


def training_margin(model: AdaBoostModel, X: np.ndarray) -> np.ndarray:
    total = np.zeros(len(X))
    for stump in model.stumps:
        total += stump.alpha * stump.predict_many(X)
    return total


def score(model: AdaBoostModel, features: list[float]) -> float:
    """Confidence in [0, 1]: affine map of the alpha-normalized voting margin."""
    if not model.stumps:
        raise ArbiterError("model has no stumps")
    if len(features) != N_FEATURES:
        raise ArbiterError(f"feature vector must have {N_FEATURES} dimensions")
    if features[_FAILED_FLAG] >= 1.0:
        return 0.0
    alpha_sum = sum(s.alpha for s in model.stumps)
    if alpha_sum <= 0.0:
        return 0.5
    margin = sum(s.alpha * s.predict(features) for s in model.stumps) / alpha_sum
    return (margin + 1.0) / 2.0


@dataclass
class Answer:
    """Final arbitrated answer, rendered for the user."""

    values: list[Value]
    confidence: float
    source: str  # REASONING | SEARCH | NONE
    provenance: set[Triple] = field(default_factory=set)
    short_text: str = ""
    long_text: str | None = None
    query_debug: str = ""
    clarification: str | None = None
    answer_kind: str = "ENTITY_SET"
    value_labels: list[str] = field(default_factory=list)  # one display string per answer value


def clarification_answer(message: str) -> Answer:
    return Answer(
        values=[],
        confidence=0.0,
        source=SOURCE_NONE,
        clarification=message,
        short_text=message,
        answer_kind="CLARIFICATION",
    )


def arbitrate(r1: QAResult, r2: QAResult, model: AdaBoostModel) -> Answer:
    """Pick the higher-confidence result; ties go to the reasoning backend."""
    for r in (r1, r2):
        if r.features is None:
            raise ArbiterError("QAResult.features must be filled before arbitration")
    c1 = score(model, r1.features)
    c2 = score(model, r2.features)
    if r1.failed and r2.failed:
        return clarification_answer("I could not find an answer to that question.")
    if r1.failed or r2.failed:
        winner, conf = (r2, c2) if r1.failed else (r1, c1)
    elif c1 > c2:
        winner, conf = r1, c1
    elif c2 > c1:
        winner, conf = r2, c2
    else:
        winner, conf = (r1, c1) if r1.source == SOURCE_REASONING else (r2, c2)
    return Answer(
        values=list(winner.values),
        confidence=conf,
        source=winner.source,
        provenance=set(winner.provenance),
        query_debug=winner.query_debug,
        answer_kind=winner.answer_kind,
    )


# -- model file --------------------------------------------------------------


def save_model(model: AdaBoostModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ADABOOST v1 rounds={model.rounds}\n")
        for s in model.stumps:
            fh.write(f"{s.feature} {s.threshold!r} {s.polarity} {s.alpha!r}\n")


def load_model(path: str) -> AdaBoostModel:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("ADABOOST v1 "):
        raise ArbiterError(f"{path}: not an ADABOOST v1 model file")
    try:
        rounds = int(lines[0].split("rounds=")[1])
    except (IndexError, ValueError) as exc:
        raise ArbiterError(f"{path}: malformed header: {lines[0]!r}") from exc
    stumps = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 4:
            raise ArbiterError(f"{path}:{lineno}: expected 4 fields")
        feature = int(parts[0])
        if not 0 <= feature < N_FEATURES:
            raise ArbiterError(f"{path}:{lineno}: feature index {feature} out of range")
        polarity = int(parts[2])
        if polarity not in (1, -1):
            raise ArbiterError(f"{path}:{lineno}: polarity must be +/-1")
        stumps.append(Stump(feature=feature, threshold=float(parts[1]), polarity=polarity, alpha=float(parts[3])))
    return AdaBoostModel(stumps=stumps, rounds=rounds)
