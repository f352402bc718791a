"""Prediction scoring, the task-type router, and composite reporting.

Levels and metrics:

* L1 severity class -> accuracy
* L2 hottest quadrant -> accuracy
* L3 16x16 binary mask -> mean IoU (both-empty counts as 1.0)
* L4 free-text answer -> keyword F1 (primary) and ROUGE-L (reported)

Keyword F1 tokenizes by lowercasing and splitting on non-alphanumerics,
drops a fixed 30-word stopword list, and compares token *sets*. ROUGE-L is
LCS-based F1 on the same tokenization without stopword removal. Prediction
files are JSONL, one record per line with sample_id / level / model_id /
payload; L3 masks travel as 256-character 0/1 strings in row-major order.

The router maps each level to a model; the composite score is the
weight-vector dot product of the routed per-level scores. A model with no
score at a routed level contributes 0 (with a warning): that encodes e.g. a
CNN's lack of any free-text pathway at L4.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DataError, load_labels, load_manifest
from .radiomap import QUADRANT_ORDER, SEVERITY_LEVELS
from .rng import substream

logger = logging.getLogger(__name__)

LEVELS = ("L1", "L2", "L3", "L4")
L3_RESOLUTION = 16

# Fixed content-word filter for keyword F1 (exactly 30 entries).
STOPWORDS = frozenset(
    """a an the is are was were be been being of in on at to for with and or
    by from as that this it its which what would there""".split()
)

# Measured per-level scores for a supervised CNN baseline and a frozen
# vision-language model, bundled as default router inputs. The CNN has no
# free-text generation pathway, hence 0 at L4.
DEFAULT_MODEL_SCORES: dict[str, dict[str, float]] = {
    "cnn": {"L1": 0.729, "L2": 0.657, "L3": 0.552, "L4": 0.0},
    "vlm": {"L1": 0.006, "L2": 0.336, "L3": 0.467, "L4": 0.576},
}

WEIGHT_SCHEMES: dict[str, tuple[float, float, float, float]] = {
    "default": (0.2, 0.2, 0.3, 0.3),
    "equal": (0.25, 0.25, 0.25, 0.25),
    "spatial-heavy": (0.1, 0.1, 0.5, 0.3),
    "reasoning-heavy": (0.1, 0.1, 0.2, 0.6),
}

STANDARD_ROUTINGS: dict[str, dict[str, str]] = {
    "cnn-only": {level: "cnn" for level in LEVELS},
    "vlm-only": {level: "vlm" for level in LEVELS},
    "naive": {"L1": "vlm", "L2": "vlm", "L3": "cnn", "L4": "vlm"},
    "optimal": {"L1": "cnn", "L2": "cnn", "L3": "cnn", "L4": "vlm"},
}


class PredictionFormatError(DataError):
    pass


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def keyword_tokens(text: str) -> set[str]:
    return set(tokenize(text)) - STOPWORDS


def accuracy(predictions: dict[str, str], gold: dict[str, str]) -> float:
    """Exact-match fraction over sample ids; every prediction needs a gold."""
    if not predictions:
        raise ValueError("no predictions to score")
    missing = set(predictions) - set(gold)
    if missing:
        raise DataError(f"predictions reference unknown sample ids: {sorted(missing)[:5]}")
    hits = sum(1 for sid, label in predictions.items() if gold[sid] == label)
    return hits / len(predictions)


def iou(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shape mismatch: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def keyword_f1(prediction_text: str, gold_text: str) -> float:
    pred = keyword_tokens(prediction_text)
    gold = keyword_tokens(gold_text)
    if not pred and not gold:
        return 1.0
    if not pred or not gold:
        return 0.0
    overlap = len(pred & gold)
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(gold)
    return 2 * precision * recall / (precision + recall)


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest common subsequence length, two-row dynamic programming."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for token in a:
        curr = [0] * (len(b) + 1)
        for j, other in enumerate(b, start=1):
            curr[j] = prev[j - 1] + 1 if token == other else max(prev[j], curr[j - 1])
        prev = curr
    return prev[-1]


def rouge_l(prediction_text: str, gold_text: str) -> float:
    """Token-level LCS F1 (beta = 1), stopwords retained."""
    pred = tokenize(prediction_text)
    gold = tokenize(gold_text)
    if not pred and not gold:
        return 1.0
    if not pred or not gold:
        return 0.0
    lcs = lcs_length(pred, gold)
    if lcs == 0:
        return 0.0
    precision = lcs / len(pred)
    recall = lcs / len(gold)
    return 2 * precision * recall / (precision + recall)


def mask_from_string(bits: str, resolution: int = L3_RESOLUTION) -> np.ndarray:
    expected = resolution * resolution
    if len(bits) != expected or set(bits) - {"0", "1"}:
        raise PredictionFormatError(
            f"mask payload must be {expected} chars of 0/1, got {len(bits)} chars"
        )
    return (np.frombuffer(bits.encode(), dtype=np.uint8) == ord("1")).reshape(
        resolution, resolution
    )


def mask_to_string(mask: np.ndarray) -> str:
    return "".join("1" if v else "0" for v in np.asarray(mask, dtype=bool).ravel())


# ---------------------------------------------------------------------------
# Prediction files and per-level scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    level: str
    model_id: str
    payload: str

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "level": self.level,
            "model_id": self.model_id,
            "payload": self.payload,
        }


@dataclass(frozen=True)
class LevelScores:
    model_id: str
    scores: dict[str, float]  # level -> mean metric; absent level = no records
    counts: dict[str, int]
    rouge_l_mean: float | None = None  # auxiliary L4 statistic

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "scores": dict(self.scores),
            "counts": dict(self.counts),
            "rouge_l_mean": self.rouge_l_mean,
        }


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                record = PredictionRecord(
                    sample_id=str(raw["sample_id"]),
                    level=str(raw["level"]),
                    model_id=str(raw["model_id"]),
                    payload=str(raw["payload"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise PredictionFormatError(f"{path}:{lineno}: malformed record ({exc})") from exc
            if record.level not in LEVELS:
                raise PredictionFormatError(
                    f"{path}:{lineno}: unknown level {record.level!r} (expected one of {LEVELS})"
                )
            records.append(record)
    return records


class GoldStore:
    """Lazy per-sample gold labels backed by a generated dataset directory."""

    def __init__(self, dataset_dir: str | Path, manifest: dict | None = None):
        self.dataset_dir = Path(dataset_dir)
        self.manifest = manifest or load_manifest(dataset_dir)
        self._cache: dict[str, dict] = {}

    @property
    def sample_order(self) -> list[str]:
        return list(self.manifest["sample_order"])

    def labels(self, sample_id: str) -> dict:
        if sample_id not in self._cache:
            self._cache[sample_id] = load_labels(self.dataset_dir, self.manifest, sample_id)
        return self._cache[sample_id]

    def gold_payload(self, sample_id: str, level: str) -> str:
        record = self.labels(sample_id)
        if level == "L1":
            return record["severity"]
        if level == "L2":
            return record["hottest_quadrant"]
        if level == "L3":
            return record["mask16"]
        if level == "L4":
            return record["l4_reference"]
        raise DataError(f"unknown level {level!r}")


def score_predictions(
    predictions: list[PredictionRecord] | str | Path, gold: GoldStore
) -> LevelScores:
    """Per-level means for one model's prediction file."""
    records = (
        predictions
        if isinstance(predictions, list)
        else read_predictions(predictions)
    )
    if not records:
        return LevelScores(model_id="(empty)", scores={}, counts={})
    model_ids = {r.model_id for r in records}
    if len(model_ids) > 1:
        raise DataError(f"prediction file mixes model ids: {sorted(model_ids)}")
    seen: set[tuple[str, str]] = set()
    by_level: dict[str, list[PredictionRecord]] = {}
    known = set(gold.manifest["samples"])
    for record in records:
        key = (record.sample_id, record.level)
        if key in seen:
            raise DataError(f"duplicate prediction for sample {record.sample_id} {record.level}")
        seen.add(key)
        if record.sample_id not in known:
            raise DataError(f"prediction references unknown sample id {record.sample_id!r}")
        by_level.setdefault(record.level, []).append(record)

    scores: dict[str, float] = {}
    counts: dict[str, int] = {}
    rouge_mean = None
    for level, level_records in by_level.items():
        counts[level] = len(level_records)
        if level in ("L1", "L2"):
            preds = {r.sample_id: r.payload for r in level_records}
            golds = {r.sample_id: gold.gold_payload(r.sample_id, level) for r in level_records}
            scores[level] = accuracy(preds, golds)
        elif level == "L3":
            values = [
                iou(
                    mask_from_string(r.payload),
                    mask_from_string(gold.gold_payload(r.sample_id, "L3")),
                )
                for r in level_records
            ]
            scores[level] = float(np.mean(values))
        else:
            refs = [gold.gold_payload(r.sample_id, "L4") for r in level_records]
            scores[level] = float(
                np.mean([keyword_f1(r.payload, ref) for r, ref in zip(level_records, refs)])
            )
            rouge_mean = float(
                np.mean([rouge_l(r.payload, ref) for r, ref in zip(level_records, refs)])
            )
    return LevelScores(
        model_id=next(iter(model_ids)),
        scores=scores,
        counts=counts,
        rouge_l_mean=rouge_mean,
    )


# ---------------------------------------------------------------------------
# Router and composite scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightScheme:
    weights: tuple[float, float, float, float]
    name: str = "custom"

    def __post_init__(self) -> None:
        if len(self.weights) != len(LEVELS):
            raise ValueError("need one weight per level")
        if any(w < 0 or w > 1 for w in self.weights):
            raise ValueError("weights must lie in [0, 1]")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)}")

    def __getitem__(self, i: int) -> float:
        return self.weights[i]


@dataclass(frozen=True)
class CompositeReport:
    weights: WeightScheme
    configurations: dict[str, float]  # routing name -> composite score
    baseline: str
    deltas_pct: dict[str, float]  # routing name -> % change vs baseline
    routings: dict[str, dict[str, str]]
    best_name: str
    best_routing: dict[str, str] = field(default_factory=dict)
    best_score: float = 0.0

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights.weights),
            "weights_name": self.weights.name,
            "configurations": dict(self.configurations),
            "baseline": self.baseline,
            "deltas_pct": dict(self.deltas_pct),
            "routings": {k: dict(v) for k, v in self.routings.items()},
            "best_name": self.best_name,
            "best_routing": dict(self.best_routing),
            "best_score": self.best_score,
        }


def _routed_score(scores_by_model: dict[str, dict[str, float]], model: str, level: str) -> float:
    model_scores = scores_by_model.get(model)
    if model_scores is None:
        raise DataError(f"routing references unknown model {model!r}")
    value = model_scores.get(level)
    if value is None:
        logger.warning("model %s has no %s score; contributing 0 to the composite", model, level)
        return 0.0
    return value


def composite_score(
    scores_by_model: dict[str, dict[str, float]],
    weights: WeightScheme,
    routing: dict[str, str],
) -> float:
    missing = set(LEVELS) - set(routing)
    if missing:
        raise ValueError(f"routing must cover all levels; missing {sorted(missing)}")
    return sum(
        weights[i] * _routed_score(scores_by_model, routing[level], level)
        for i, level in enumerate(LEVELS)
    )


def best_routing(
    scores_by_model: dict[str, dict[str, float]], weights: WeightScheme
) -> tuple[dict[str, str], float]:
    """Exhaustive search over all per-level model assignments."""
    models = sorted(scores_by_model)
    best: tuple[dict[str, str], float] | None = None
    stack: list[dict[str, str]] = [{}]
    for level in LEVELS:
        stack = [{**rule, level: m} for rule in stack for m in models]
    for rule in stack:
        score = composite_score(scores_by_model, weights, rule)
        if best is None or score > best[1]:
            best = (rule, score)
    assert best is not None
    return best


def composite_report(
    scores_by_model: dict[str, dict[str, float]],
    weights: WeightScheme,
    routings: dict[str, dict[str, str]] | None = None,
    baseline: str = "cnn-only",
) -> CompositeReport:
    routings = routings if routings is not None else dict(STANDARD_ROUTINGS)
    configurations = {
        name: composite_score(scores_by_model, weights, rule)
        for name, rule in routings.items()
    }
    if baseline not in configurations:
        raise ValueError(f"baseline {baseline!r} not among configurations {sorted(routings)}")
    base = configurations[baseline]
    deltas = {
        name: (100.0 * (score - base) / base if base else float("nan"))
        for name, score in configurations.items()
    }
    rule, score = best_routing(scores_by_model, weights)
    best_name = next(
        (name for name, r in routings.items() if r == rule and name != baseline), "searched"
    )
    return CompositeReport(
        weights=weights,
        configurations=configurations,
        baseline=baseline,
        deltas_pct=deltas,
        routings=routings,
        best_name=best_name,
        best_routing=rule,
        best_score=score,
    )


def format_composite_table(report: CompositeReport) -> str:
    """Aligned plain-text table of routing configurations."""
    rows = [("configuration", "composite", f"vs {report.baseline}")]
    for name, score in report.configurations.items():
        delta = report.deltas_pct[name]
        delta_text = "---" if name == report.baseline else f"{delta:+.1f}%"
        rows.append((name, f"{score:.3f}", delta_text))
    rows.append(("searched best", f"{report.best_score:.3f}", _routing_text(report.best_routing)))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _routing_text(rule: dict[str, str]) -> str:
    return ",".join(f"{level}={rule[level]}" for level in LEVELS)


# ---------------------------------------------------------------------------
# Synthetic noisy predictor (harness self-test fixture)
# ---------------------------------------------------------------------------


def synth_predict(
    gold: GoldStore,
    level: str,
    error_rate: float,
    seed: int,
    model_id: str | None = None,
) -> list[PredictionRecord]:
    """Gold labels with controlled corruption, for calibrating the scorer.

    L1/L2: each record independently replaced (probability error_rate) by a
    uniformly random *wrong* label. L3: each mask cell flipped independently
    with probability error_rate. L4: the whole answer replaced (probability
    error_rate) by a token-shuffled version of itself.
    """
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    if not 0.0 <= error_rate <= 1.0:
        raise ValueError("error_rate must be in [0, 1]")
    model = model_id or f"synth-{level.lower()}-e{error_rate:g}"
    rng = substream(seed, "synth-predict", level)
    records = []
    for sample_id in gold.sample_order:
        truth = gold.gold_payload(sample_id, level)
        if level in ("L1", "L2"):
            payload = truth
            if rng.random() < error_rate:
                pool = SEVERITY_LEVELS if level == "L1" else QUADRANT_ORDER
                wrong = [c for c in pool if c != truth]
                payload = wrong[int(rng.integers(0, len(wrong)))]
        elif level == "L3":
            mask = mask_from_string(truth)
            flips = rng.random(mask.shape) < error_rate
            payload = mask_to_string(np.logical_xor(mask, flips))
        else:
            payload = truth
            if rng.random() < error_rate:
                tokens = truth.split()
                payload = " ".join(
                    tokens[i] for i in rng.permutation(len(tokens))
                )
        records.append(PredictionRecord(sample_id, level, model, payload))
    return records


def write_predictions(records: list[PredictionRecord], path: str | Path) -> None:
    with open(path, "wb") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True).encode() + b"\n")
