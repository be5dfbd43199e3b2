import numpy as np
import pytest

from fedomg.core import GradientSet, dot, norm, weighted_sum
from fedomg.errors import DimensionError, InvalidInputError


def test_dot_basic():
    assert dot(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0
    assert dot(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_dot_self_is_norm_squared():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.standard_normal(rng.integers(1, 30))
        assert dot(a, a) == pytest.approx(norm(a) ** 2, rel=1e-12)


def test_dot_length_mismatch():
    with pytest.raises(DimensionError):
        dot(np.ones(3), np.ones(4))


def test_norm_basic():
    assert norm(np.array([3.0, 4.0])) == 5.0
    assert norm(np.zeros(7)) == 0.0
    assert norm(np.array([0.5, 0.5])) == pytest.approx(np.sqrt(0.5))


def test_weighted_sum_basic():
    out = weighted_sum([np.array([2.0, 0.0]), np.array([0.0, 4.0])], [0.25, 0.75])
    np.testing.assert_allclose(out, [0.5, 3.0])
    v = np.array([1.5, -2.0, 3.0])
    np.testing.assert_array_equal(weighted_sum([v], [1.0]), v)
    np.testing.assert_array_equal(
        weighted_sum([v, 2 * v], [0.0, 0.0]), np.zeros(3)
    )


def test_weighted_sum_mismatch():
    with pytest.raises(DimensionError):
        weighted_sum([np.ones(2)], [1.0, 2.0])
    with pytest.raises(DimensionError):
        weighted_sum([np.ones(2), np.ones(3)], [1.0, 2.0])
    with pytest.raises(DimensionError):
        weighted_sum([], [])


def test_dot_symmetric_bilinear_cauchy_schwarz():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = rng.integers(1, 20)
        a, b, c = rng.standard_normal((3, n))
        s, t = rng.standard_normal(2)
        assert dot(a, b) == pytest.approx(dot(b, a), rel=1e-12, abs=1e-12)
        assert dot(s * a + t * b, c) == pytest.approx(
            s * dot(a, c) + t * dot(b, c), rel=1e-9, abs=1e-9
        )
        assert abs(dot(a, b)) <= norm(a) * norm(b) + 1e-9


def test_weighted_sum_linear_in_weights():
    rng = np.random.default_rng(2)
    for _ in range(50):
        u, m = rng.integers(1, 6), rng.integers(1, 12)
        vectors = list(rng.standard_normal((u, m)))
        w1, w2 = rng.standard_normal((2, u))
        combined = weighted_sum(vectors, w1 + w2)
        separate = weighted_sum(vectors, w1) + weighted_sum(vectors, w2)
        np.testing.assert_allclose(combined, separate, rtol=1e-12, atol=1e-12)


def test_gradient_set_validation():
    gs = GradientSet.from_lists([[1.0, 2.0], [3.0, 4.0]], sample_counts=[5, 7])
    assert gs.num_clients == 2 and gs.dim == 2
    assert gs.client_ids == (0, 1)
    with pytest.raises(InvalidInputError):
        GradientSet.from_lists([[1.0, 2.0]], sample_counts=[0])
    with pytest.raises(InvalidInputError):
        GradientSet.from_lists([[np.nan, 0.0]])
    with pytest.raises(DimensionError):
        GradientSet(np.empty((0, 3)), np.empty(0, dtype=int), ())
    with pytest.raises(ValueError):
        GradientSet.from_lists([[1.0, 2.0], [1.0]])
