"""Round-based federated orchestration: client sampling, local training,
pseudo-gradient collection, server aggregation and evaluation, with a
leave-one-domain-out driver for the domain-generalization task."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aggregator import AggregationConfig, AggregationReport, aggregate_round, apply_global_update
from .core import GradientSet, ParamVector, norm
from .data import TEST, TRAIN, DomainDataset
from .errors import InvalidInputError
from .metrics import MetricsRecord, generalization_gap, invariance_report, pairwise_gip
from .models import Batch, ModelSpec, accuracy, init_params, scores, sgd_epoch
from .seeding import derive_rng, derive_seed

# stream tags so the per-purpose RNGs cannot collide
_TAG_INIT = 0x1217
_TAG_SAMPLE = 0x5A31
_TAG_CLIENT = 0x10CA
_TAG_EPOCH = 0xE0


@dataclass
class ExperimentConfig:
    rounds: int
    local_lr: float
    batch_size: int
    model: ModelSpec
    aggregation: AggregationConfig
    local_epochs: int = 5
    participation_ratio: float = 1.0
    seed: int = 0
    eval_stride: int = 1

    def __post_init__(self):
        if self.rounds < 0:
            raise InvalidInputError("rounds must be >= 0")
        if not self.local_lr > 0:
            raise InvalidInputError("local_lr must be > 0")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if self.local_epochs < 1:
            raise InvalidInputError("local_epochs must be >= 1")
        if not 0.0 < self.participation_ratio <= 1.0:
            raise InvalidInputError("participation_ratio must be in (0, 1]")
        if self.eval_stride < 1:
            raise InvalidInputError("eval_stride must be >= 1")


@dataclass
class FederationState:
    """Global parameters plus the client datasets and evaluation splits."""

    theta: ParamVector
    client_batches: list[Batch]
    client_ids: list = field(default_factory=list)
    source_tests: list[Batch] = field(default_factory=list)
    target_test: Batch | None = None

    def __post_init__(self):
        if not self.client_batches:
            raise InvalidInputError("need at least one client")
        if not self.client_ids:
            self.client_ids = list(range(len(self.client_batches)))


@dataclass
class RoundReport:
    round_index: int
    aggregation: AggregationReport
    per_client_grad_norms: list[float]
    metrics: MetricsRecord | None


def local_train(spec: ModelSpec, theta_global: ParamVector, data: Batch, epochs: int,
                lr: float, batch_size: int, seed: int) -> ParamVector:
    """E epochs of local SGD; returns the pseudo-gradient
    theta_global - theta_final (the accumulated descent direction)."""
    theta = np.asarray(theta_global, dtype=np.float64)
    updated = theta
    for e in range(epochs):
        updated = sgd_epoch(spec, updated, data, lr, batch_size,
                            derive_seed(seed, e, _TAG_EPOCH))
    return theta - updated


def _pooled_accuracy(spec: ModelSpec, theta: ParamVector, batches: list[Batch]) -> float:
    correct = 0
    total = 0
    for b in batches:
        pred = np.argmax(scores(spec, theta, b), axis=1)
        correct += int(np.sum(pred == b.labels))
        total += len(b)
    return correct / total


def _sample_clients(num_clients: int, ratio: float, seed: int, round_index: int) -> list[int]:
    size = math.ceil(ratio * num_clients)
    rng = derive_rng(seed, round_index, _TAG_SAMPLE)
    return sorted(rng.choice(num_clients, size=size, replace=False).tolist())


def _evaluate(state: FederationState, cfg: ExperimentConfig, grads: GradientSet,
              report: AggregationReport) -> MetricsRecord:
    source_acc = _pooled_accuracy(cfg.model, state.theta, state.source_tests)
    target_acc = None
    gap = None
    if state.target_test is not None:
        target_acc = accuracy(cfg.model, state.theta, state.target_test)
        gap = generalization_gap(source_acc, target_acc)
    applied = report.g_igd
    if norm(applied) > 0 and all(norm(g) > 0 for g in grads.gradients):
        cosines, cos_var = invariance_report(grads, applied)
    else:
        cosines, cos_var = [], float("nan")
    gip = pairwise_gip(grads) if grads.num_clients >= 2 else float("nan")
    return MetricsRecord(
        source_accuracy=source_acc,
        target_accuracy=target_acc,
        generalization_gap=gap,
        per_domain_cosine=cosines,
        cosine_variance=cos_var,
        pairwise_gip=gip,
    )


def run_round(state: FederationState, cfg: ExperimentConfig, round_index: int,
              evaluate: bool = True) -> tuple[ParamVector, RoundReport]:
    """One communication round; returns the new parameters and its report.

    Samples ceil(ratio * U) clients without replacement, trains each from
    the current global parameters under its own seeded stream, aggregates
    the pseudo-gradients and applies the global update. Evaluation (when
    enabled) measures the post-update parameters.
    """
    chosen = _sample_clients(len(state.client_batches), cfg.participation_ratio,
                             cfg.seed, round_index)
    pseudo = []
    counts = []
    for c in chosen:
        batch = state.client_batches[c]
        g = local_train(cfg.model, state.theta, batch, cfg.local_epochs, cfg.local_lr,
                        cfg.batch_size, derive_seed(cfg.seed, round_index, c, _TAG_CLIENT))
        pseudo.append(g)
        counts.append(len(batch))
    grads = GradientSet.from_lists(
        pseudo, sample_counts=counts, client_ids=[state.client_ids[c] for c in chosen]
    )
    agg = aggregate_round(grads, cfg.aggregation)
    new_theta = apply_global_update(state.theta, agg.g_igd, cfg.aggregation.global_lr)
    state.theta = new_theta
    metrics = _evaluate(state, cfg, grads, agg) if evaluate else None
    report = RoundReport(
        round_index=round_index,
        aggregation=agg,
        per_client_grad_norms=[norm(g) for g in grads.gradients],
        metrics=metrics,
    )
    return new_theta, report


def _run_rounds(state: FederationState, cfg: ExperimentConfig) -> list[RoundReport]:
    reports = []
    for r in range(cfg.rounds):
        evaluate = (r % cfg.eval_stride == 0) or (r == cfg.rounds - 1)
        _, report = run_round(state, cfg, r, evaluate=evaluate)
        reports.append(report)
    return reports


def run_fl_experiment(client_batches: list[Batch], test_batch: Batch,
                      cfg: ExperimentConfig) -> list[RoundReport]:
    """Standard FL run: pre-partitioned clients, one global test set."""
    state = FederationState(
        theta=init_params(cfg.model, derive_seed(cfg.seed, _TAG_INIT)),
        client_batches=list(client_batches),
        source_tests=[test_batch],
    )
    return _run_rounds(state, cfg)


def run_fdg_experiment(domains: list[DomainDataset], held_out: int,
                       cfg: ExperimentConfig) -> list[RoundReport]:
    """Leave-one-domain-out run: one client per source domain.

    ``domains`` carries train and test splits (see data.rect4_train_test);
    source clients train on their domain's train split, evaluation uses
    the source test splits pooled (source accuracy) and the held-out
    domain's test split (target accuracy).
    """
    ids = sorted({d.domain_id for d in domains})
    if held_out not in ids:
        raise InvalidInputError(f"held_out domain {held_out} not among {ids}")
    if len(ids) < 2:
        raise InvalidInputError("need at least 2 domains for leave-one-domain-out")

    def pick(domain_id: int, split: str) -> DomainDataset:
        for d in domains:
            if d.domain_id == domain_id and d.split == split:
                return d
        raise InvalidInputError(f"domain {domain_id} is missing a {split} split")

    source_ids = [d for d in ids if d != held_out]
    state = FederationState(
        theta=init_params(cfg.model, derive_seed(cfg.seed, _TAG_INIT)),
        client_batches=[pick(d, TRAIN).batch for d in source_ids],
        client_ids=source_ids,
        source_tests=[pick(d, TEST).batch for d in source_ids],
        target_test=pick(held_out, TEST).batch,
    )
    return _run_rounds(state, cfg)
