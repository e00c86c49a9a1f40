"""Evaluation metrics: word-level edit distance, SSA, compression rate,
F1 over kept positions, the accuracy/compression trade-off t, and the
accuracy-class histogram.

All values are fractions in [0, 1]; percentages exist only at the
presentation layer.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict
from typing import Sequence


class MetricError(ValueError):
    pass


class EmptyReferenceError(MetricError):
    pass


class ZeroOriginalError(MetricError):
    pass


class ZeroCompressionError(MetricError):
    pass


class LengthMismatchError(MetricError):
    pass


HISTOGRAM_EDGES = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Word-level Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,  # delete x
                cur[j - 1] + 1,  # insert y
                prev[j - 1] + (x != y),  # substitute
            )
        prev = cur
    return prev[-1]


def ssa(hypothesis: Sequence[str], reference: Sequence[str]) -> float:
    """Simple String Accuracy: 1 - distance/len(reference), clamped at 0."""
    if len(reference) == 0:
        raise EmptyReferenceError("SSA needs a non-empty reference")
    return max(0.0, 1.0 - edit_distance(hypothesis, reference) / len(reference))


def compression_rate(compressed_len: int, original_len: int) -> float:
    """Compressed length over original length; lower means more compression."""
    if original_len < 1:
        raise ZeroOriginalError("original length must be >= 1")
    return compressed_len / original_len


def f1(predicted: Sequence[int], gold: Sequence[int]) -> float:
    """F1 over kept leaf positions. Both-empty keeps count as perfect."""
    if len(predicted) != len(gold):
        raise LengthMismatchError(
            f"mask lengths differ: {len(predicted)} vs {len(gold)}"
        )
    pred_keep = sum(1 for b in predicted if b)
    gold_keep = sum(1 for b in gold if b)
    if pred_keep == 0 and gold_keep == 0:
        return 1.0
    both = sum(1 for p, g in zip(predicted, gold) if p and g)
    if both == 0:
        return 0.0
    precision = both / pred_keep
    recall = both / gold_keep
    return 2 * precision * recall / (precision + recall)


def tradeoff_t(accuracy: float, compression: float) -> float:
    """Hybrid model-selection metric: accuracy squared over compression rate."""
    if compression <= 0.0:
        raise ZeroCompressionError("compression rate must be positive")
    return accuracy * accuracy / compression


def accuracy_histogram(per_sentence: Sequence[float]) -> list[int]:
    """Counts over the 7 accuracy classes [0.3,0.4) ... [0.9,1.0].

    Values below 0.3 land in the first bin with a warning; the top bin is
    closed so an accuracy of exactly 1.0 counts in [0.9, 1.0].
    """
    counts = [0] * 7
    low = 0
    for v in per_sentence:
        if v < HISTOGRAM_EDGES[0]:
            low += 1
            counts[0] += 1
            continue
        for k in range(7):
            if v < HISTOGRAM_EDGES[k + 1] or k == 6:
                counts[k] += 1
                break
    if low:
        warnings.warn(f"{low} accuracy value(s) below 0.3 counted in first bin")
    return counts


@dataclass
class MetricsReport:
    accuracy: float
    compression_rate: float
    gold_compression_rate: float
    f1: float
    t: float
    per_sentence_accuracies: list[float]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def histogram(self) -> list[int]:
        return accuracy_histogram(self.per_sentence_accuracies)


def evaluate_masks(
    source_sentences: Sequence[Sequence[str]],
    predicted_masks: Sequence[Sequence[int]],
    gold_masks: Sequence[Sequence[int]],
) -> MetricsReport:
    """Corpus-level report from per-sentence predictions.

    Accuracy is the unweighted mean per-sentence SSA of predicted vs gold
    compressed token lists; compression rates are means of per-sentence
    ratios; t comes from the corpus-level accuracy and compression.
    """
    if not (len(source_sentences) == len(predicted_masks) == len(gold_masks)):
        raise LengthMismatchError("corpus-level length mismatch")
    if not source_sentences:
        raise MetricError("cannot evaluate an empty corpus")
    accs, rates, gold_rates, f1s = [], [], [], []
    for toks, pred, gold in zip(source_sentences, predicted_masks, gold_masks):
        pred_toks = [w for w, b in zip(toks, pred) if b]
        gold_toks = [w for w, b in zip(toks, gold) if b]
        accs.append(ssa(pred_toks, gold_toks) if gold_toks else float(not pred_toks))
        rates.append(compression_rate(len(pred_toks), len(toks)))
        gold_rates.append(compression_rate(len(gold_toks), len(toks)))
        f1s.append(f1(pred, gold))
    accuracy = sum(accs) / len(accs)
    rate = sum(rates) / len(rates)
    return MetricsReport(
        accuracy=accuracy,
        compression_rate=rate,
        gold_compression_rate=sum(gold_rates) / len(gold_rates),
        f1=sum(f1s) / len(f1s),
        t=tradeoff_t(accuracy, rate) if rate > 0 else 0.0,
        per_sentence_accuracies=accs,
    )


def format_report_table(rows: list[dict], title: str = "") -> str:
    """Aligned-text table with the corpus-results column set."""
    header = [
        "Corpus",
        "Memory Size",
        "Accuracy %",
        "Compress. (Gold) %",
        "F1 score %",
        "t",
    ]
    lines = []
    if title:
        lines.append(title)
    body = []
    for r in rows:
        body.append(
            [
                str(r.get("corpus", "-")),
                str(r.get("hidden_size", "-")),
                f"{100 * r['accuracy']:.2f}",
                f"{100 * r['compression_rate']:.2f} ({100 * r['gold_compression_rate']:.2f})",
                f"{100 * r['f1']:.2f}" if "f1" in r else "-",
                f"{r['t']:.4f}",
            ]
        )
    widths = [max(len(h), *(len(row[k]) for row in body)) for k, h in enumerate(header)]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def histogram_csv(counts: Sequence[int]) -> str:
    total = sum(counts) or 1
    lines = ["bin,count,percent"]
    for k, c in enumerate(counts):
        lo = HISTOGRAM_EDGES[k]
        hi = HISTOGRAM_EDGES[k + 1]
        lines.append(f"{lo:.1f}-{hi:.1f},{c},{100 * c / total:.2f}")
    return "\n".join(lines) + "\n"
