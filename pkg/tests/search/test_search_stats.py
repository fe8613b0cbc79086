import itertools

import pytest

from apps.search.exceptions import UndefinedCorrelationError
from apps.search.stats import average_ranks, mean_and_sd, spearman


def brute_force_spearman(a, b):
    n = len(a)
    ra = {v: i + 1 for i, v in enumerate(sorted(a))}
    rb = {v: i + 1 for i, v in enumerate(sorted(b))}
    d2 = sum((ra[x] - rb[y]) ** 2 for x, y in zip(a, b))
    return 1 - 6 * d2 / (n * (n * n - 1))


def test_spearman_examples():
    assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert spearman([1, 2, 3, 4], [1, 2, 4, 3]) == pytest.approx(0.8)


def test_spearman_matches_closed_form_without_ties():
    base = [1.5, 2.0, 3.25, 4.0, 5.5, 7.0]
    for perm in itertools.permutations(base):
        assert spearman(base, perm) == pytest.approx(brute_force_spearman(base, perm), abs=1e-12)


def test_ties_get_average_ranks():
    assert average_ranks([0.3, 0.1, 0.3, 0.2]).tolist() == [3.5, 1.0, 3.5, 2.0]
    # three-way tie against a strict ordering
    assert spearman([1, 1, 1, 2], [1, 2, 3, 4]) == pytest.approx(0.7745966692414834)


def test_spearman_is_invariant_under_monotone_maps():
    a = [0.2, 0.9, 0.4, 0.7]
    b = [3.0, 1.0, 2.0, 5.0]
    assert spearman(a, b) == pytest.approx(spearman([x**3 for x in a], [10 * y for y in b]))


@pytest.mark.parametrize(
    "a, b", [([1.0], [2.0]), ([], []), ([1, 1, 1], [1, 2, 3]), ([1, 2, 3], [5, 5, 5])]
)
def test_undefined_correlation(a, b):
    with pytest.raises(UndefinedCorrelationError, match="undefined correlation"):
        spearman(a, b)


def test_length_mismatch():
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])


def test_mean_and_sd():
    assert mean_and_sd([1.0, 3.0]) == (2.0, 1.0)
    mean, sd = mean_and_sd([])
    assert mean != mean and sd != sd
