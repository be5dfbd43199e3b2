"""Dataset generation and ingestion: the Rect-4 toy domains, Gaussian
blobs, label-skewed Dirichlet partitioning, and IDX image files."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import IdxFormatError, InvalidInputError
from .models import Batch
from .seeding import derive_rng

TRAIN = "train"
TEST = "test"

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

# Rect-4 geometry. Domain u in {1..4} occupies a vertical strip of width 4;
# points avoid a margin around the horizontal axis so the global rule
# (label 1 iff y > 0) has a clean boundary. Each domain's local boundary is
# the vertical line through its strip midpoint (x = -6 for domain 1), which
# is orthogonal to the global one.
RECT4_DOMAINS = (1, 2, 3, 4)
_X_WIDTH = 4.0
_X_LEFT = -8.0
_Y_MIN, _Y_MAX = 0.5, 4.0


def rect4_strip(domain_id: int) -> tuple[float, float]:
    lo = _X_LEFT + _X_WIDTH * (domain_id - 1)
    return lo, lo + _X_WIDTH


def rect4_local_boundary(domain_id: int) -> float:
    lo, hi = rect4_strip(domain_id)
    return 0.5 * (lo + hi)


@dataclass
class DomainDataset:
    domain_id: int
    batch: Batch
    split: str

    def __post_init__(self):
        if self.split not in (TRAIN, TEST):
            raise InvalidInputError(f"split must be '{TRAIN}' or '{TEST}', got {self.split!r}")


@dataclass
class Rect4Config:
    points_per_domain: int
    noise_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.points_per_domain < 1:
            raise InvalidInputError("points_per_domain must be positive")
        if not 0.0 <= self.noise_fraction < 0.5:
            raise InvalidInputError(
                f"noise_fraction must be in [0, 0.5), got {self.noise_fraction}"
            )


@dataclass
class DirichletPartition:
    alpha: float
    num_clients: int
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInputError(f"alpha must be > 0, got {self.alpha}")
        if self.num_clients < 1:
            raise InvalidInputError("num_clients must be >= 1")


def gen_rect4(cfg: Rect4Config, split: str = TRAIN) -> list[DomainDataset]:
    """Generate the 4-domain synthetic binary task.

    Labels follow the global rule (1 iff y > 0) except for a
    noise_fraction of each domain relabeled by the domain's local vertical
    boundary, so locally-optimal classifiers disagree with the global one.
    """
    if split not in (TRAIN, TEST):
        raise InvalidInputError(f"split must be '{TRAIN}' or '{TEST}', got {split!r}")
    out = []
    for d in RECT4_DOMAINS:
        rng = derive_rng(cfg.seed, d, 0 if split == TRAIN else 1)
        n = cfg.points_per_domain
        lo, hi = rect4_strip(d)
        x = rng.uniform(lo, hi, size=n)
        y = rng.uniform(_Y_MIN, _Y_MAX, size=n) * rng.choice((-1.0, 1.0), size=n)
        labels = (y > 0).astype(np.int64)
        k = int(round(cfg.noise_fraction * n))
        if k > 0:
            noisy = rng.choice(n, size=k, replace=False)
            labels[noisy] = (x[noisy] > rect4_local_boundary(d)).astype(np.int64)
        out.append(DomainDataset(d, Batch(np.stack([x, y], axis=1), labels), split))
    return out


def rect4_train_test(cfg: Rect4Config) -> list[DomainDataset]:
    """Train and test splits for all four domains (independent draws)."""
    return gen_rect4(cfg, TRAIN) + gen_rect4(cfg, TEST)


def blobs_train_test(num_classes: int, input_dim: int, train_per_class: int,
                     test_per_class: int, seed: int, spread: float = 1.0,
                     center_scale: float = 4.0) -> tuple[Batch, Batch]:
    """Isotropic Gaussian blobs, one per class; both splits share centers."""
    if num_classes < 2 or input_dim < 1:
        raise InvalidInputError("need num_classes >= 2 and input_dim >= 1")
    if train_per_class < 1 or test_per_class < 1:
        raise InvalidInputError("per-class sample counts must be positive")
    centers = derive_rng(seed, 0xB0B5, 0).normal(0.0, center_scale, size=(num_classes, input_dim))

    def draw(tag: int, per_class: int) -> Batch:
        rng = derive_rng(seed, 0xB0B5, tag)
        xs, ys = [], []
        for k in range(num_classes):
            xs.append(centers[k] + spread * rng.standard_normal((per_class, input_dim)))
            ys.append(np.full(per_class, k, dtype=np.int64))
        return Batch(np.concatenate(xs), np.concatenate(ys))

    return draw(1, train_per_class), draw(2, test_per_class)


def dirichlet_partition_indices(labels: np.ndarray, part: DirichletPartition) -> list[np.ndarray]:
    """Index lists per client under per-class Dirichlet(alpha) proportions.

    Every sample is assigned exactly once; clients left empty receive one
    sample reassigned from the largest client. Each client's indices are
    returned sorted ascending.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    if n < part.num_clients:
        raise InvalidInputError(
            f"cannot split {n} samples across {part.num_clients} clients"
        )
    rng = derive_rng(part.seed, 0xD1C7)
    assigned: list[list[int]] = [[] for _ in range(part.num_clients)]
    for k in np.unique(labels):
        idx_k = np.nonzero(labels == k)[0]
        idx_k = rng.permutation(idx_k)
        props = rng.dirichlet(np.full(part.num_clients, part.alpha))
        cuts = np.floor(np.cumsum(props) * len(idx_k)).astype(int)[:-1]
        for client, chunk in enumerate(np.split(idx_k, cuts)):
            assigned[client].extend(chunk.tolist())
    for client in range(part.num_clients):
        if not assigned[client]:
            donor = max(range(part.num_clients), key=lambda c: len(assigned[c]))
            assigned[client].append(assigned[donor].pop())
    return [np.array(sorted(ix), dtype=np.int64) for ix in assigned]


def dirichlet_partition(data: Batch, part: DirichletPartition) -> list[Batch]:
    """Split a batch across clients by label-distribution skew."""
    return [
        Batch(data.inputs[ix], data.labels[ix])
        for ix in dirichlet_partition_indices(data.labels, part)
    ]


def _read_header(f, path: str, expected_magic: int, ndim: int, field: str) -> list[int]:
    head = f.read(4 * (1 + ndim))
    if len(head) != 4 * (1 + ndim):
        raise IdxFormatError(f"{field}: truncated header in {path}")
    words = struct.unpack(f">{1 + ndim}i", head)
    if words[0] != expected_magic:
        raise IdxFormatError(
            f"{field}: bad magic 0x{words[0]:08x} in {path}, expected 0x{expected_magic:08x}"
        )
    return list(words[1:])


def load_idx(images_path: str, labels_path: str) -> Batch:
    """Read big-endian IDX image/label files into a flat float batch.

    Images: magic 0x00000803, dims (count, rows, cols), u8 pixels scaled
    to [0, 1] and flattened row-major. Labels: magic 0x00000801, u8.
    """
    with open(images_path, "rb") as f:
        count, rows, cols = _read_header(f, images_path, IDX_IMAGE_MAGIC, 3, "image header")
        raw = f.read(count * rows * cols)
        if len(raw) != count * rows * cols:
            raise IdxFormatError(
                f"image data: expected {count * rows * cols} bytes in {images_path}, got {len(raw)}"
            )
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)
    with open(labels_path, "rb") as f:
        (label_count,) = _read_header(f, labels_path, IDX_LABEL_MAGIC, 1, "label header")
        raw = f.read(label_count)
        if len(raw) != label_count:
            raise IdxFormatError(
                f"label data: expected {label_count} bytes in {labels_path}, got {len(raw)}"
            )
        labels = np.frombuffer(raw, dtype=np.uint8)
    if label_count != count:
        raise IdxFormatError(
            f"count mismatch: {count} images in {images_path} but {label_count} labels in {labels_path}"
        )
    return Batch(images.astype(np.float64) / 255.0, labels.astype(np.int64))
