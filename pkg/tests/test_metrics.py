import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sprod.exceptions import EmptyInput
from sprod.metrics import aupr, auroc, fpr_at_tpr, summarize

from oracles import aupr_bruteforce, auroc_bruteforce, fpr_at_tpr_bruteforce


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([2, 3], [0, 1]) == 1.0

    def test_full_tie(self):
        assert auroc([1], [1]) == 0.5

    def test_one_winning_pair_of_two(self):
        assert auroc([2, 0], [1]) == 0.5

    def test_identical_multisets(self):
        assert auroc([1, 2, 3], [1, 2, 3]) == 0.5

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            auroc([], [1])
        with pytest.raises(EmptyInput):
            auroc([1], [])

    def test_nonfinite_raises(self):
        with pytest.raises(EmptyInput):
            auroc([np.nan], [1.0])


class TestFprAtTpr:
    def test_enumerated_threshold(self):
        # 19 of 20 ID scores are >= 2, so t = 2; one of two OOD >= 2
        assert fpr_at_tpr(np.arange(1, 21), [0, 3]) == 0.5

    def test_separable(self):
        assert fpr_at_tpr([5, 6, 7], [1, 2]) == 0.0
        assert fpr_at_tpr([5, 6, 7], [1, 2], tpr_target=0.5) == 0.0

    def test_identical_multisets_fpr_equals_achieved_tpr(self):
        scores = np.array([0.1, 0.4, 0.4, 0.7, 0.9] * 4)
        t_fpr = fpr_at_tpr(scores, scores, 0.95)
        # same multiset on both sides: the OOD count at t equals the ID count
        assert t_fpr == fpr_at_tpr_bruteforce(scores, scores, 0.95)
        assert t_fpr >= 0.95

    def test_bad_target(self):
        with pytest.raises(ValueError):
            fpr_at_tpr([1], [0], tpr_target=0.0)


class TestAupr:
    def test_perfect_separation(self):
        assert aupr([2, 3], [0, 1], "id") == 1.0

    def test_all_identical(self):
        assert aupr([1, 1], [1, 1, 1], "id") == pytest.approx(2 / 5, abs=1e-15)

    def test_bad_positive(self):
        with pytest.raises(ValueError):
            aupr([1], [0], positive="both")


def _random_fixture(rng, i):
    n = int(rng.integers(5, 301))
    m = int(rng.integers(5, 301))
    id_s = rng.standard_normal(n)
    ood_s = rng.standard_normal(m) - 0.5
    if i % 2:  # inject ties, within and across the two sets
        id_s = np.round(id_s, 1)
        ood_s = np.round(ood_s, 1)
    return id_s, ood_s


@pytest.mark.parametrize("i", range(25))
def test_matches_bruteforce_oracles(i):
    rng = np.random.default_rng(1000 + i)
    id_s, ood_s = _random_fixture(rng, i)
    assert auroc(id_s, ood_s) == pytest.approx(auroc_bruteforce(id_s, ood_s), abs=1e-12)
    assert fpr_at_tpr(id_s, ood_s) == pytest.approx(
        fpr_at_tpr_bruteforce(id_s, ood_s), abs=1e-12
    )
    assert aupr(id_s, ood_s, "id") == pytest.approx(
        aupr_bruteforce(id_s, ood_s, "id"), abs=1e-12
    )
    assert aupr(id_s, ood_s, "ood") == pytest.approx(
        aupr_bruteforce(id_s, ood_s, "ood"), abs=1e-12
    )


finite_scores = st.lists(
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False), min_size=1, max_size=40
)


@settings(max_examples=60, deadline=None)
@given(finite_scores, finite_scores)
def test_auroc_swap_symmetry(a, b):
    assert auroc(a, b) + auroc(b, a) == pytest.approx(1.0, abs=1e-12)


int_scores = st.lists(st.integers(-300, 300), min_size=1, max_size=40)


@settings(max_examples=60, deadline=None)
@given(int_scores, int_scores)
def test_auroc_monotone_transform_invariance(a, b):
    # integer-valued scores so exp(x/10) cannot collide distinct values
    base = auroc(a, b)
    transform = lambda x: np.exp(np.asarray(x, float) / 10.0)
    assert auroc(transform(a), transform(b)) == pytest.approx(base, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(finite_scores, finite_scores, st.floats(0.05, 0.95))
def test_fpr_monotone_in_target(a, b, target):
    assert fpr_at_tpr(a, b, target) <= fpr_at_tpr(a, b, min(target + 0.05, 1.0)) + 1e-15


def test_summarize_fields():
    s = summarize([3, 4, 5], [0, 1])
    assert s.auroc == 1.0 and s.fpr_at_95tpr == 0.0
    assert s.aupr_in == 1.0 and s.aupr_out == 1.0
    assert (s.n_id, s.n_ood) == (3, 2)
    for v in (s.auroc, s.fpr_at_95tpr, s.aupr_in, s.aupr_out):
        assert 0.0 <= v <= 1.0
