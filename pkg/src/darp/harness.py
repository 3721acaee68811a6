"""Synthetic long-tailed scenarios and imbalance-aware metrics.

Pseudo-labels are drawn from a log-prior-shift model: each row is

    softmax((onehot(true) + bias_strength * log pi_labeled) / noise_temp + xi)

with ``xi`` standard normal.  Larger ``bias_strength`` pushes mass toward the
head classes of the labeled profile; ``noise_temp -> 0`` gives one-hot rows.
This is a desk-scale stand-in for the output of a biased classifier, not a
model of any particular training method.

Random draws use numpy's ``Generator`` over the PCG64 bit generator seeded
with the scenario seed; the draw order is fixed (class permutation first,
then the M x K noise matrix in row-major order).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Mapping

import numpy as np

from .errors import InvalidInput, MissingClass
from .refinery import mismatch
from .types import ImbalanceProfile

_INT_SNAP = 1e-9


def class_counts(profile: ImbalanceProfile) -> np.ndarray:
    """``floor(head * ratio**(-(k-1)/(K-1)))`` for k = 1..K, flipped if reversed."""
    k = profile.num_classes
    counts = []
    for i in range(k):
        x = profile.head_count * profile.ratio ** (-i / (k - 1))
        nearest = round(x)
        # values within rounding noise of an integer are that integer
        counts.append(nearest if abs(x - nearest) <= _INT_SNAP * max(1.0, x) else math.floor(x))
    out = np.array(counts, dtype=np.int64)
    return out[::-1].copy() if profile.reversed else out


@dataclass(frozen=True)
class SyntheticScenario:
    profile_labeled: ImbalanceProfile
    profile_unlabeled: ImbalanceProfile
    bias_strength: float = 2.0
    noise_temp: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.profile_labeled.num_classes != self.profile_unlabeled.num_classes:
            raise InvalidInput("labeled and unlabeled profiles disagree on the class count")
        if not self.bias_strength >= 0.0:
            raise InvalidInput("bias_strength must be >= 0")
        if not self.noise_temp > 0.0:
            raise InvalidInput("noise_temp must be > 0")

    @property
    def num_classes(self) -> int:
        return self.profile_labeled.num_classes

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


SCENARIO_KEYS = {
    "num_classes": int,
    "labeled_head": int,
    "labeled_ratio": float,
    "unlabeled_head": int,
    "unlabeled_ratio": float,
    "unlabeled_reversed": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
    "bias_strength": float,
    "noise_temp": float,
    "seed": int,
}

SCENARIO_DEFAULTS = {
    "num_classes": 10,
    "labeled_head": 1500,
    "labeled_ratio": 100.0,
    "unlabeled_head": 1000,
    "unlabeled_ratio": 1.0,
    "unlabeled_reversed": False,
    "bias_strength": 2.0,
    "noise_temp": 1.0,
    "seed": 0,
}


def scenario_from_mapping(values: Mapping[str, Any]) -> SyntheticScenario:
    """Build a scenario from flat keys (see ``SCENARIO_KEYS``); missing keys take defaults."""
    unknown = set(values) - set(SCENARIO_KEYS)
    if unknown:
        raise InvalidInput(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    merged = dict(SCENARIO_DEFAULTS)
    for key, raw in values.items():
        try:
            merged[key] = SCENARIO_KEYS[key](raw)
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"bad value for {key}: {raw!r}") from exc
    k = merged["num_classes"]
    return SyntheticScenario(
        profile_labeled=ImbalanceProfile(merged["labeled_head"], merged["labeled_ratio"], k),
        profile_unlabeled=ImbalanceProfile(
            merged["unlabeled_head"], merged["unlabeled_ratio"], k, merged["unlabeled_reversed"]
        ),
        bias_strength=merged["bias_strength"],
        noise_temp=merged["noise_temp"],
        seed=merged["seed"],
    )


def read_scenario_file(path: str) -> dict[str, str]:
    """Parse a ``key = value`` file; blank lines and ``#`` comments are skipped."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInput(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
    return values


def generate_biased_pseudolabels(
    scenario: SyntheticScenario,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (pseudo-labels, true classes, true class counts) for a scenario."""
    rng = np.random.Generator(np.random.PCG64(scenario.seed))
    k = scenario.num_classes
    counts_u = class_counts(scenario.profile_unlabeled)
    truth = rng.permutation(np.repeat(np.arange(k), counts_u))
    counts_l = class_counts(scenario.profile_labeled).astype(np.float64)
    log_prior = np.log(counts_l / counts_l.sum())

    signal = np.zeros((truth.size, k))
    signal[np.arange(truth.size), truth] = 1.0
    signal += scenario.bias_strength * log_prior
    logits = signal / scenario.noise_temp + rng.standard_normal((truth.size, k))
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs, truth, counts_u.astype(np.float64)


def _recalls(pred: Any, truth: Any, num_classes: int) -> np.ndarray:
    p = np.asarray(pred).ravel().astype(np.int64)
    t = np.asarray(truth).ravel().astype(np.int64)
    if p.shape != t.shape:
        raise InvalidInput(f"{p.size} predictions for {t.size} true labels")
    for name, arr in (("predictions", p), ("true labels", t)):
        if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
            raise InvalidInput(f"{name} must lie in [0, {num_classes})")
    totals = np.bincount(t, minlength=num_classes)
    missing = np.flatnonzero(totals == 0)
    if missing.size:
        raise MissingClass(f"class {int(missing[0])} never occurs in the true labels")
    correct = np.bincount(t[p == t], minlength=num_classes)
    return correct / totals


def balanced_accuracy(pred: Any, truth: Any, num_classes: int) -> float:
    """Mean per-class recall."""
    return float(np.mean(_recalls(pred, truth, num_classes)))


def geometric_mean_score(pred: Any, truth: Any, num_classes: int) -> float:
    """Geometric mean of per-class recall; 0 when any class has zero recall."""
    rec = _recalls(pred, truth, num_classes)
    if np.any(rec == 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(rec))))


def imbalance_ratio(counts: Any) -> float:
    """Largest over smallest class count (``inf`` when some class is empty)."""
    c = np.asarray(counts, dtype=np.float64)
    if c.min() <= 0.0:
        return math.inf
    return float(c.max() / c.min())


def evaluate_summary(
    pred: Any, truth: Any, num_classes: int, labels: Any | None = None
) -> dict[str, float | None]:
    """Metrics dictionary written by the CLI.

    ``mismatch`` compares the class totals of ``labels`` (or of one-hot
    predictions when no soft labels are given) against the true counts.
    Infinite imbalance ratios are reported as ``None``.
    """
    p = np.asarray(pred).ravel().astype(np.int64)
    t = np.asarray(truth).ravel().astype(np.int64)
    true_counts = np.bincount(t, minlength=num_classes).astype(np.float64)
    if labels is None:
        soft = np.zeros((p.size, num_classes))
        soft[np.arange(p.size), p] = 1.0
    else:
        soft = np.asarray(labels, dtype=np.float64)
    pred_counts = np.bincount(p, minlength=num_classes)

    def finite(x: float) -> float | None:
        return None if math.isinf(x) else x

    return {
        "bACC": balanced_accuracy(p, t, num_classes),
        "GM": geometric_mean_score(p, t, num_classes),
        "mismatch": mismatch(soft, true_counts),
        "imbalance_ratio_pred": finite(imbalance_ratio(pred_counts)),
        "imbalance_ratio_truth": finite(imbalance_ratio(true_counts)),
    }
