"""Invariance and performance measurements, plus CSV/JSON export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import GradientSet, ParamVector, dot, norm
from .errors import InvalidInputError

CSV_PREFIX = ("round", "source_acc", "target_acc", "gen_gap",
              "cosine_var", "gip", "min_ip", "mean_ip")


@dataclass
class MetricsRecord:
    """Per-round measurements. target_accuracy and generalization_gap are
    present only for runs with a held-out domain; pairwise_gip is NaN for
    single-client rounds."""

    source_accuracy: float
    target_accuracy: float | None
    generalization_gap: float | None
    per_domain_cosine: list[float]
    cosine_variance: float
    pairwise_gip: float


def cosine_similarity(a: ParamVector, b: ParamVector) -> float:
    """a.b / (|a||b|), clamped to [-1, 1]; rejects zero-norm inputs."""
    na, nb = norm(a), norm(b)
    if na == 0.0 or nb == 0.0:
        raise InvalidInputError("cosine similarity undefined for zero-norm vectors")
    return float(np.clip(dot(a, b) / (na * nb), -1.0, 1.0))


def invariance_report(grads: GradientSet, g_global: ParamVector) -> tuple[list[float], float]:
    """Per-client cosine against the applied global direction and the
    population variance of those cosines (low variance = invariant)."""
    cosines = [cosine_similarity(g, g_global) for g in grads.gradients]
    return cosines, float(np.var(cosines))


def pairwise_gip(grads: GradientSet) -> float:
    """Mean pairwise inner product (2/(U(U-1))) sum_{u<v} g_u.g_v."""
    u = grads.num_clients
    if u < 2:
        raise InvalidInputError("pairwise inner products need at least 2 clients")
    gram = grads.gradients @ grads.gradients.T
    off_diag_sum = float(gram.sum() - np.trace(gram))
    return off_diag_sum / (u * (u - 1))


def generalization_gap(source_acc: float, target_acc: float) -> float:
    """Source-split accuracy minus target-domain accuracy (may be negative)."""
    return source_acc - target_acc


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return repr(float(value))


def _rows(records) -> tuple[list[str], list[dict]]:
    """Flatten RoundReports into export rows; gamma length must be uniform."""
    rows = []
    width = None
    for rep in records:
        if rep.metrics is None:
            continue
        gamma = np.asarray(rep.aggregation.gamma_star, dtype=np.float64)
        if width is None:
            width = gamma.shape[0]
        elif gamma.shape[0] != width:
            raise InvalidInputError(
                f"round {rep.round_index}: gamma length {gamma.shape[0]} != {width}; "
                "export requires a fixed client count"
            )
        m = rep.metrics
        row = {
            "round": rep.round_index,
            "source_acc": m.source_accuracy,
            "target_acc": m.target_accuracy,
            "gen_gap": m.generalization_gap,
            "cosine_var": m.cosine_variance,
            "gip": m.pairwise_gip,
            "min_ip": rep.aggregation.min_inner_product,
            "mean_ip": rep.aggregation.mean_inner_product,
        }
        for i, g in enumerate(gamma):
            row[f"gamma_{i}"] = float(g)
        rows.append(row)
    header = list(CSV_PREFIX) + [f"gamma_{i}" for i in range(width or 0)]
    return header, rows


def export(records, fmt: str, path: str) -> None:
    """Write per-round metrics; CSV column order is part of the interface.

    Floats are formatted with shortest round-trip representation, so a
    parse-back reproduces them exactly. Rounds without evaluated metrics
    (eval stride > 1) are skipped.
    """
    if fmt not in ("csv", "json"):
        raise InvalidInputError(f"format must be 'csv' or 'json', got {fmt!r}")
    header, rows = _rows(records)
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(
                str(row["round"]) if col == "round" else _fmt(row.get(col))
                for col in header
            ))
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(rows, indent=2) + "\n"
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
