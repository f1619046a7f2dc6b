from collections import Counter

import numpy as np
import pytest

from hatekit.ensemble import EnsembleSpec, ensemble_predict, majority_vote, soft_average
from hatekit.errors import ValidationError


def test_clear_majority():
    assert majority_vote([0, 0, 1]) == 0  # [HOF, HOF, NOT] -> HOF


def test_three_way_tie_lowest_class_index():
    assert majority_vote([0, 1, 2], tie_break="lowest_class_index") == 0


def test_tie_uses_averaged_probs_among_tied():
    probs = [np.array([0.1, 0.6, 0.3]), np.array([0.2, 0.2, 0.6])]
    # votes 1 and 2 tie; among the tied, class 2 averages higher (0.45 > 0.4)
    assert majority_vote([1, 2], tie_break="soft_average_fallback", probs=probs) == 2


def test_tie_without_probs_falls_to_lowest():
    assert majority_vote([2, 1], tie_break="soft_average_fallback") == 1


def test_vote_result_always_an_input_label():
    rng = np.random.default_rng(0)
    for _ in range(300):
        labels = rng.integers(0, 4, size=int(rng.integers(1, 8))).tolist()
        probs = [np.full(4, 0.25) for _ in labels]
        assert majority_vote(labels, probs=probs) in labels


def test_vote_against_brute_force_mode():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(0, 4)) * 2 + 1  # odd length 1..7
        votes = rng.integers(0, 2, size=n).tolist()
        counts = Counter(votes)
        expected = max(counts, key=lambda lab: counts[lab])  # no ties: odd binary
        assert majority_vote(votes) == expected


def test_empty_votes_rejected():
    with pytest.raises(ValidationError):
        majority_vote([])


def test_soft_average_examples():
    identical = [np.array([0.3, 0.7])] * 3
    assert soft_average(identical) == pytest.approx(np.array([0.3, 0.7]))
    assert soft_average([np.array([1.0, 0.0]), np.array([0.0, 1.0])]) == pytest.approx(
        np.array([0.5, 0.5])
    )


def test_soft_average_permutation_invariant_exactly():
    rng = np.random.default_rng(2)
    members = []
    for _ in range(7):
        p = rng.random(4)
        members.append(p / p.sum())
    base = soft_average(members)
    for _ in range(10):
        perm = rng.permutation(len(members))
        shuffled = [members[i] for i in perm]
        assert soft_average(shuffled).tobytes() == base.tobytes()


def test_soft_average_length_mismatch():
    with pytest.raises(ValidationError):
        soft_average([np.array([0.5, 0.5]), np.array([1.0, 0.0, 0.0])])
    with pytest.raises(ValidationError):
        soft_average([])


def test_spec_requires_odd_members_for_voting():
    with pytest.raises(ValidationError, match="odd"):
        EnsembleSpec(members=("a", "b"), mode="majority_vote")
    EnsembleSpec(members=("a", "b", "c"), mode="majority_vote")
    EnsembleSpec(members=("a", "b"), mode="soft_average")


def test_ensemble_predict_tie_goes_to_lowest_index():
    spec = EnsembleSpec(members=("m1", "m2"), mode="soft_average")
    maps = [{"x": np.array([0.6, 0.4])}, {"x": np.array([0.4, 0.6])}]
    assert ensemble_predict(spec, maps) == {"x": 0}


def test_ensemble_predict_single_member_passthrough():
    spec = EnsembleSpec(members=("only",), mode="soft_average")
    maps = [{"x": np.array([0.1, 0.9]), "y": np.array([0.8, 0.2])}]
    assert ensemble_predict(spec, maps) == {"x": 1, "y": 0}


def test_ensemble_predict_majority_mode():
    spec = EnsembleSpec(members=("a", "b", "c"), mode="majority_vote")
    maps = [
        {"x": np.array([0.9, 0.1])},
        {"x": np.array([0.2, 0.8])},
        {"x": np.array([0.6, 0.4])},
    ]
    assert ensemble_predict(spec, maps) == {"x": 0}


def test_argmax_invariant_under_member_rescaling():
    rng = np.random.default_rng(3)
    spec = EnsembleSpec(members=("a", "b"), mode="soft_average")
    for _ in range(50):
        maps = []
        for _ in range(2):
            p = rng.random(3) + 1e-6
            maps.append({"x": p / p.sum()})
        base = ensemble_predict(spec, maps)
        scaled = []
        for m in maps:
            c = float(rng.uniform(0.5, 2.0))
            v = m["x"] * c
            scaled.append({"x": v / v.sum()})
        assert ensemble_predict(spec, scaled) == base


def test_ensemble_predict_id_mismatch():
    spec = EnsembleSpec(members=("a", "b"), mode="soft_average")
    with pytest.raises(ValidationError, match="y"):
        ensemble_predict(spec, [{"x": np.array([1.0, 0.0])}, {"y": np.array([1.0, 0.0])}])


def test_ensemble_predict_member_count_mismatch():
    spec = EnsembleSpec(members=("a", "b"), mode="soft_average")
    with pytest.raises(ValidationError):
        ensemble_predict(spec, [{"x": np.array([1.0, 0.0])}])


def test_ensemble_predict_deterministic():
    spec = EnsembleSpec(members=("a", "b"), mode="soft_average")
    maps = [{"x": np.array([0.55, 0.45])}, {"x": np.array([0.2, 0.8])}]
    assert ensemble_predict(spec, maps) == ensemble_predict(spec, maps)
