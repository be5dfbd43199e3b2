"""On-server matching-gradient aggregation.

The server receives one pseudo-gradient per client, forms a reference
update (sample-weighted FedAvg mean by default), and searches the ball of
radius kappa*|g_ref| around that reference for the direction maximizing
the worst-case inner product with the client gradients. By duality the
optimum is

    g_matched = g_ref + kappa*|g_ref| * (w*g) / |w*g|,
    w* = argmin_simplex  (w*g).g_ref + kappa*|g_ref|*|w*g|,

so the search runs over client weights (dimension = number of clients)
instead of parameter space. ``dual_oracle_check`` re-derives the optimum
by brute-force sampling of the ball boundary, independent of the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GradientSet, ParamVector, dot, norm, weighted_sum
from .errors import DimensionError, InvalidInputError
from . import backends
from .simplex import InnerOptConfig, validate_simplex_weights

REFERENCE_KINDS = ("weighted", "uniform", "external")

# |w*g| below this counts as degenerate: the matched direction is undefined
# and the aggregate falls back to the reference gradient.
DEGENERATE_NORM = 1e-12

# Solver schedule for verification runs (dual-gap suite, CLI oracle-check):
# small instances with O(1) gradient scale, run to convergence rather than
# on the production schedule. Near-antiparallel client pairs make the
# optimal combination direction ill-conditioned, hence the long run.
ORACLE_INNER = InnerOptConfig(learning_rate=0.01, iterations=10_000, momentum=0.9)


@dataclass
class AggregationConfig:
    """Server-side aggregation settings.

    kappa is the searching-radius ratio: the matched update stays within
    distance kappa*|g_ref| of the reference gradient. kappa = 0 reproduces
    the reference method exactly.
    """

    kappa: float = 0.5
    global_lr: float = 1.0
    inner: InnerOptConfig = field(default_factory=InnerOptConfig)
    reference: str = "weighted"

    def __post_init__(self):
        if not self.kappa >= 0:
            raise InvalidInputError(f"kappa must be >= 0, got {self.kappa}")
        if not self.global_lr > 0:
            raise InvalidInputError(f"global_lr must be > 0, got {self.global_lr}")
        if self.reference not in REFERENCE_KINDS:
            raise InvalidInputError(
                f"reference must be one of {REFERENCE_KINDS}, got {self.reference!r}"
            )


@dataclass
class AggregationReport:
    """Outcome of one server aggregation."""

    gamma_star: np.ndarray
    g_fl: ParamVector
    g_igd: ParamVector
    objective_value: float
    min_inner_product: float
    mean_inner_product: float


def reference_gradient(grads: GradientSet, reference: str = "weighted",
                       external: ParamVector | None = None) -> ParamVector:
    """Aggregate the clients the way the reference FL method would.

    'weighted' is the sample-count-weighted mean (FedAvg), 'uniform' the
    arithmetic mean, 'external' passes through a caller-supplied vector.
    """
    if reference == "weighted":
        total = float(grads.sample_counts.sum())
        if total <= 0:
            raise InvalidInputError("total sample count must be positive")
        w = grads.sample_counts.astype(np.float64) / total
        return weighted_sum(list(grads.gradients), w)
    if reference == "uniform":
        n = grads.num_clients
        return weighted_sum(list(grads.gradients), np.full(n, 1.0 / n))
    if reference == "external":
        if external is None:
            raise InvalidInputError("reference='external' requires an external vector")
        external = np.asarray(external, dtype=np.float64)
        if external.shape != (grads.dim,):
            raise DimensionError(
                f"external reference has shape {external.shape}, expected ({grads.dim},)"
            )
        return external
    raise InvalidInputError(f"unknown reference kind {reference!r}")


def omg_objective(gamma, grads: GradientSet, g_fl: ParamVector, kappa: float) -> float:
    """(w*g).g_ref + kappa*|g_ref|*|w*g| for client weights w = gamma."""
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape != (grads.num_clients,):
        raise DimensionError(
            f"gamma has shape {gamma.shape}, expected ({grads.num_clients},)"
        )
    combo = weighted_sum(list(grads.gradients), gamma)
    return dot(combo, g_fl) + kappa * norm(g_fl) * norm(combo)


def omg_objective_grad(gamma, grads: GradientSet, g_fl: ParamVector, kappa: float) -> np.ndarray:
    """Analytic gradient of the matching objective in the client weights.

    Component u is g_u.g_ref + kappa*|g_ref|*(g_u.(w*g))/|w*g|; when the
    combination norm is below DEGENERATE_NORM the second term is taken as
    0 (a valid subgradient of the norm at the origin).
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape != (grads.num_clients,):
        raise DimensionError(
            f"gamma has shape {gamma.shape}, expected ({grads.num_clients},)"
        )
    g_fl = np.asarray(g_fl, dtype=np.float64)
    if g_fl.shape != (grads.dim,):
        raise DimensionError(f"g_fl has shape {g_fl.shape}, expected ({grads.dim},)")
    out = grads.gradients @ g_fl
    if kappa > 0:
        combo = weighted_sum(list(grads.gradients), gamma)
        nrm = norm(combo)
        if nrm > DEGENERATE_NORM:
            out = out + (kappa * norm(g_fl) / nrm) * (grads.gradients @ combo)
    return out


def solve_gamma(grads: GradientSet, g_fl: ParamVector, cfg: AggregationConfig) -> np.ndarray:
    """Minimize the matching objective over the simplex from uniform init.

    Precomputes the client Gram matrix so each solver iteration costs
    O(U^2) instead of O(U*M), then runs the backend projected-gradient
    kernel; identical iterates to ``minimize_on_simplex`` applied to
    ``omg_objective``.
    """
    g_fl = np.asarray(g_fl, dtype=np.float64)
    if g_fl.shape != (grads.dim,):
        raise DimensionError(f"g_fl has shape {g_fl.shape}, expected ({grads.dim},)")
    A = grads.gradients
    G = A @ A.T
    b = A @ g_fl
    c = cfg.kappa * norm(g_fl)
    gamma, _ = backends.solve_gram(
        G, b, c, cfg.inner.learning_rate, cfg.inner.iterations, cfg.inner.momentum
    )
    return gamma


def invariant_gradient(gamma_star, grads: GradientSet, g_fl: ParamVector,
                       kappa: float) -> ParamVector:
    """g_ref + kappa*|g_ref| * unit(w*g); falls back to g_ref exactly when
    kappa = 0 or either norm degenerates."""
    gamma_star = validate_simplex_weights(gamma_star)
    g_fl = np.asarray(g_fl, dtype=np.float64)
    if kappa == 0.0:
        return g_fl.copy()
    combo = weighted_sum(list(grads.gradients), gamma_star)
    n_combo = norm(combo)
    n_fl = norm(g_fl)
    if n_combo <= DEGENERATE_NORM or n_fl <= DEGENERATE_NORM:
        return g_fl.copy()
    return g_fl + (kappa * n_fl / n_combo) * combo


def aggregate_round(grads: GradientSet, cfg: AggregationConfig,
                    external_reference: ParamVector | None = None) -> AggregationReport:
    """Reference gradient -> weight solve -> matched direction, plus the
    worst-case/average inner products of clients against the result."""
    g_fl = reference_gradient(grads, cfg.reference, external_reference)
    gamma_star = solve_gamma(grads, g_fl, cfg)
    g_igd = invariant_gradient(gamma_star, grads, g_fl, cfg.kappa)
    inner = grads.gradients @ g_igd
    return AggregationReport(
        gamma_star=gamma_star,
        g_fl=g_fl,
        g_igd=g_igd,
        objective_value=omg_objective(gamma_star, grads, g_fl, cfg.kappa),
        min_inner_product=float(inner.min()),
        mean_inner_product=float(inner.mean()),
    )


def apply_global_update(theta: ParamVector, g_igd: ParamVector, global_lr: float) -> ParamVector:
    """theta - global_lr * g_igd.

    Pseudo-gradients are defined as (theta_before - theta_after), so with
    kappa = 0 and global_lr = 1 this reproduces the reference FL update
    (sample-weighted mean of client post-training parameters).
    """
    theta = np.asarray(theta, dtype=np.float64)
    g_igd = np.asarray(g_igd, dtype=np.float64)
    if theta.shape != g_igd.shape:
        raise DimensionError(f"shapes differ: {theta.shape} vs {g_igd.shape}")
    return theta - global_lr * g_igd


def dual_oracle_check(grads: GradientSet, g_fl: ParamVector, kappa: float,
                      g_igd: ParamVector, samples: int, seed: int) -> float:
    """Brute-force optimality check against the ball-boundary supremum.

    Draws uniform points x on the sphere |x - g_ref| = kappa*|g_ref| and
    returns max_x min_u g_u.x - min_u g_u.g_matched. The matched direction
    solves the primal, so a well-solved instance yields a value at or
    below the solver tolerance (typically <= 0 up to sampling resolution).
    """
    if samples < 1:
        raise InvalidInputError(f"samples must be >= 1, got {samples}")
    g_fl = np.asarray(g_fl, dtype=np.float64)
    g_igd = np.asarray(g_igd, dtype=np.float64)
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((samples, grads.dim))
    lengths = np.sqrt(np.sum(dirs * dirs, axis=1, keepdims=True))
    lengths[lengths == 0.0] = 1.0
    radius = kappa * norm(g_fl)
    points = g_fl[None, :] + radius * (dirs / lengths)
    sampled_best = float((points @ grads.gradients.T).min(axis=1).max())
    achieved = float((grads.gradients @ g_igd).min())
    return sampled_best - achieved


def dual_gap_suite(instances: int, seed: int, clients=(2, 3), dims=(2, 3, 4),
                   kappas=(0.1, 0.5, 1.0), samples: int = 10_000,
                   inner: InnerOptConfig | None = None) -> float:
    """Max dual-oracle gap over a grid of random instances.

    Cycles through the client-count/dimension/kappa grid, solves each
    instance with the verification schedule and checks it against the
    boundary-sampling oracle. Returns the worst gap observed.
    """
    if instances < 1:
        raise InvalidInputError(f"instances must be >= 1, got {instances}")
    inner = inner or ORACLE_INNER
    root = np.random.SeedSequence([seed & 0xFFFFFFFF, 0x0DCE])
    worst = -np.inf
    for i, child in enumerate(root.spawn(instances)):
        rng = np.random.default_rng(child)
        u = clients[i % len(clients)]
        m = dims[(i // len(clients)) % len(dims)]
        kappa = kappas[(i // (len(clients) * len(dims))) % len(kappas)]
        grads = GradientSet.from_lists(
            rng.standard_normal((u, m)),
            sample_counts=rng.integers(1, 11, size=u),
        )
        cfg = AggregationConfig(kappa=kappa, inner=inner)
        report = aggregate_round(grads, cfg)
        gap = dual_oracle_check(
            grads, report.g_fl, kappa, report.g_igd, samples,
            seed=int(child.generate_state(1)[0]),
        )
        worst = max(worst, gap)
    return float(worst)
