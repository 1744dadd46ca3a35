from __future__ import annotations

import math
import random

import pytest

from tutorlab.stats import wilcoxon_signed_rank

from oracles import wilcoxon_brute_force


def test_worked_example_n3():
    result = wilcoxon_signed_rank([1.0, 2.0, 3.0])
    assert result.statistic == 6.0
    assert result.p_value == pytest.approx(0.25)
    assert result.method == "exact"


def test_worked_example_n5():
    result = wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.0, 5.0])
    assert result.statistic == 15.0
    assert result.p_value == pytest.approx(0.0625)


def test_all_zero_differences_degenerate():
    result = wilcoxon_signed_rank([0.0, 0.0, 0.0])
    assert result.degenerate
    assert result.p_value == 1.0
    assert result.n == 0


def test_zero_differences_dropped():
    with_zeros = wilcoxon_signed_rank([0.0, 1.0, 2.0, 0.0, 3.0])
    without = wilcoxon_signed_rank([1.0, 2.0, 3.0])
    assert with_zeros.n == 3
    assert with_zeros.p_value == without.p_value


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([])


def test_symmetry_under_negation():
    diffs = [0.3, -1.2, 2.5, 0.7, -0.4]
    a = wilcoxon_signed_rank(diffs)
    b = wilcoxon_signed_rank([-d for d in diffs])
    assert a.p_value == pytest.approx(b.p_value)


def test_exact_path_matches_brute_force_small_n():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(1, 10)
        diffs = []
        for _ in range(n):
            value = rng.choice([-3, -2, -1, 0, 1, 2, 3]) * rng.choice([0.5, 1.0, 1.5])
            diffs.append(value)
        if all(d == 0 for d in diffs):
            continue
        got = wilcoxon_signed_rank(diffs)
        want_stat, want_p = wilcoxon_brute_force(diffs)
        assert got.statistic == pytest.approx(want_stat)
        assert got.p_value == pytest.approx(want_p), f"diffs={diffs}"


def test_exact_path_handles_heavy_ties():
    diffs = [1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0]
    got = wilcoxon_signed_rank(diffs)
    want_stat, want_p = wilcoxon_brute_force(diffs)
    assert got.statistic == pytest.approx(want_stat)
    assert got.p_value == pytest.approx(want_p)


def test_normal_path_used_beyond_exact_cutoff():
    rng = random.Random(3)
    diffs = [rng.gauss(0.5, 1.0) for _ in range(200)]
    result = wilcoxon_signed_rank(diffs)
    assert result.method == "normal"
    assert 0.0 <= result.p_value <= 1.0


def test_normal_approximation_close_to_exact_at_cutoff():
    # n=20 runs the exact path; force the same data through the normal path
    # by embedding it in a 21-point sample with one zero... zeros are dropped,
    # so instead compare exact n=20 against the approximation formula directly.
    rng = random.Random(11)
    diffs = [rng.gauss(0.3, 1.0) for _ in range(20)]
    exact = wilcoxon_signed_rank(diffs)
    from tutorlab.stats import _normal_two_sided_p, _signed_ranks

    ranks, signs = _signed_ranks(diffs)
    w_plus = sum(r for r, s in zip(ranks, signs) if s > 0)
    approx_p = _normal_two_sided_p(ranks, w_plus)
    assert exact.method == "exact"
    assert approx_p == pytest.approx(exact.p_value, abs=0.02)


def test_strong_one_sided_signal_gives_small_p():
    diffs = [1.0 + 0.01 * i for i in range(30)]
    result = wilcoxon_signed_rank(diffs)
    assert result.p_value < 1e-5


def test_statistic_is_positive_rank_sum():
    result = wilcoxon_signed_rank([-1.0, 2.0, -3.0, 4.0])
    # |values| 1,2,3,4 -> ranks 1,2,3,4; positives are 2 (rank 2) and 4 (rank 4)
    assert result.statistic == 6.0


def test_p_never_exceeds_one():
    rng = random.Random(23)
    for _ in range(100):
        diffs = [rng.choice([-1.0, 1.0]) for _ in range(rng.randint(1, 15))]
        assert wilcoxon_signed_rank(diffs).p_value <= 1.0


def test_median_zero_sample_large_p():
    diffs = [1.0, -1.5, 2.0, -2.5, 3.0, -3.5, 0.5, -0.75]
    result = wilcoxon_signed_rank(diffs)
    assert result.p_value > 0.5


def test_no_nan_on_all_tied_magnitudes_large_n():
    diffs = [1.0 if i % 2 else -1.0 for i in range(40)]
    result = wilcoxon_signed_rank(diffs)
    assert result.method == "normal"
    assert not math.isnan(result.p_value)
    assert result.p_value > 0.5
