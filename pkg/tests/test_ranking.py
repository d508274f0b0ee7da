import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import labels, random_doubly_stochastic, rank_matrix, treatments
from poth.errors import DegenerateCovarianceError, ValidationError
from poth.ranking import (
    Direction,
    PairwiseEffects,
    RankMatrixWarning,
    RankProbabilityMatrix,
    ReferenceEffects,
    ScoreVector,
    TreatmentSet,
    expected_rank,
    normal_cdf,
    pairwise_from_reference,
    pscore_from_pairwise,
    subset_pscore,
    sucra_from_expected_rank,
    sucra_from_rank_probs,
)

IDENTITY3 = np.eye(3)
UNIFORM3 = np.full((3, 3), 1.0 / 3.0)
CLUSTER3 = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])


class TestTreatmentSet:
    def test_basic(self):
        ts = TreatmentSet(("A", "B", "C"))
        assert ts.n == 3
        assert ts.index("B") == 1
        assert ts.direction is Direction.LARGER

    def test_too_small(self):
        with pytest.raises(ValidationError):
            TreatmentSet(("A",))

    def test_duplicates(self):
        with pytest.raises(ValidationError, match="duplicate"):
            TreatmentSet(("A", "B", "A"))

    def test_empty_label(self):
        with pytest.raises(ValidationError):
            TreatmentSet(("A", ""))

    def test_unknown_label(self):
        with pytest.raises(ValidationError, match="unknown treatment"):
            TreatmentSet(("A", "B")).index("Z")

    def test_restrict_keeps_network_order(self):
        ts = TreatmentSet(("A", "B", "C", "D"))
        assert ts.restrict(["D", "B"]).labels == ("B", "D")

    def test_flipped(self):
        ts = TreatmentSet(("A", "B"), Direction.SMALLER)
        assert ts.flipped().direction is Direction.LARGER


class TestRankProbabilityMatrix:
    def test_row_sum_error_names_row(self):
        probs = np.array([[0.6, 0.6], [0.5, 0.5]])
        with pytest.raises(ValidationError, match="T1"):
            rank_matrix(probs)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="2x2"):
            RankProbabilityMatrix(probs=np.eye(3), treatments=treatments(2))

    def test_entry_out_of_range(self):
        probs = np.array([[1.5, -0.5], [-0.5, 1.5]])
        with pytest.raises(ValidationError, match=r"out of \[0, 1\]"):
            rank_matrix(probs)

    def test_non_finite_entry(self):
        probs = np.array([[np.nan, 1.0], [0.5, 0.5]])
        with pytest.raises(ValidationError, match="non-finite"):
            rank_matrix(probs)

    def test_column_violation_warns_but_accepts(self):
        probs = np.array([[1.0, 0.0], [1.0, 0.0]])  # rows fine, columns not
        with pytest.warns(RankMatrixWarning):
            m = rank_matrix(probs)
        assert len(m.column_warnings) == 2

    def test_row_sum_within_tolerance_accepted(self):
        probs = np.array([[0.999999999, 0.0], [0.0, 0.999999999]])
        m = rank_matrix(probs)  # 1e-9 off: inside both tolerances
        assert m.probs.shape == (2, 2)
        assert m.column_warnings == ()


class TestSucra:
    def test_identity_matrix(self):
        s = sucra_from_rank_probs(rank_matrix(IDENTITY3))
        np.testing.assert_array_equal(s.scores, [1.0, 0.5, 0.0])
        assert s.kind == "sucra"

    def test_uniform_matrix(self):
        s = sucra_from_rank_probs(rank_matrix(UNIFORM3))
        np.testing.assert_allclose(s.scores, 0.5, atol=1e-15)

    def test_cluster_matrix(self):
        s = sucra_from_rank_probs(rank_matrix(CLUSTER3))
        np.testing.assert_array_equal(s.scores, [0.75, 0.75, 0.0])
        np.testing.assert_allclose(s.scores, oracles.sucra(CLUSTER3.tolist()), atol=1e-15)

    @settings(max_examples=60)
    @given(n=st.integers(2, 20), seed=st.integers(0, 2**32 - 1))
    def test_matches_brute_force_on_random_matrices(self, n, seed):
        probs = random_doubly_stochastic(np.random.default_rng(seed), n)
        s = sucra_from_rank_probs(rank_matrix(probs))
        np.testing.assert_allclose(s.scores, oracles.sucra(probs.tolist()), atol=1e-12)


class TestExpectedRank:
    def test_identity(self):
        np.testing.assert_array_equal(expected_rank(rank_matrix(IDENTITY3)), [1, 2, 3])

    def test_uniform(self):
        np.testing.assert_allclose(expected_rank(rank_matrix(UNIFORM3)), 2.0, atol=1e-15)

    def test_cluster(self):
        np.testing.assert_array_equal(expected_rank(rank_matrix(CLUSTER3)), [1.5, 1.5, 3.0])


class TestSucraFromExpectedRank:
    @pytest.mark.parametrize(
        "eranks, expect",
        [
            ((1, 2, 3), (1.0, 0.5, 0.0)),
            ((2, 2, 2), (0.5, 0.5, 0.5)),
            ((1.5, 1.5, 3), (0.75, 0.75, 0.0)),
        ],
    )
    def test_examples(self, eranks, expect):
        s = sucra_from_expected_rank(eranks, n=3)
        np.testing.assert_array_equal(s.scores, expect)

    def test_out_of_range(self):
        with pytest.raises(ValidationError, match=r"outside \[1, 3\]"):
            sucra_from_expected_rank((0.5, 2, 3), n=3)

    @settings(max_examples=60)
    @given(n=st.integers(2, 20), seed=st.integers(0, 2**32 - 1))
    def test_composition_equals_direct_sucra(self, n, seed):
        m = rank_matrix(random_doubly_stochastic(np.random.default_rng(seed), n))
        via_erank = sucra_from_expected_rank(expected_rank(m), treatments=m.treatments)
        direct = sucra_from_rank_probs(m)
        np.testing.assert_allclose(via_erank.scores, direct.scores, atol=1e-12, rtol=0)

    @settings(max_examples=40)
    @given(n=st.integers(2, 15), seed=st.integers(0, 2**32 - 1))
    def test_doubly_stochastic_means(self, n, seed):
        m = rank_matrix(random_doubly_stochastic(np.random.default_rng(seed), n))
        assert abs(float(sucra_from_rank_probs(m).scores.mean()) - 0.5) <= 1e-8
        assert abs(float(expected_rank(m).mean()) - (n + 1) / 2) <= 1e-8


class TestPairwiseFromReference:
    def test_single_contrast(self):
        r = ReferenceEffects(
            effects=np.array([1.0]),
            covariance=np.array([[0.25]]),
            reference="ref",
            treatments=TreatmentSet(("ref", "A")),
        )
        p = pairwise_from_reference(r)
        assert p.theta[1, 0] == 1.0
        assert p.se[1, 0] == 0.5
        assert p.treatments.labels == ("ref", "A")

    def test_contrast_variance(self):
        r = ReferenceEffects(
            effects=np.array([1.0, 2.0]),
            covariance=np.eye(2),
            reference="ref",
            treatments=TreatmentSet(("ref", "B", "C")),
        )
        p = pairwise_from_reference(r)
        assert p.theta[1, 2] == -1.0
        assert p.se[1, 2] == math.sqrt(2.0)

    def test_perfect_correlation_is_degenerate(self):
        r = ReferenceEffects(
            effects=np.array([1.0, 2.0]),
            covariance=np.array([[1.0, 1.0], [1.0, 1.0]]),
            reference="ref",
            treatments=TreatmentSet(("ref", "B", "C")),
        )
        with pytest.raises(DegenerateCovarianceError, match="'B' vs 'C'"):
            pairwise_from_reference(r)

    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(ValidationError, match="symmetric"):
            ReferenceEffects(
                effects=np.array([1.0, 2.0]),
                covariance=np.array([[1.0, 0.5], [0.2, 1.0]]),
                reference="ref",
                treatments=TreatmentSet(("ref", "B", "C")),
            )

    def test_negative_diagonal_rejected(self):
        with pytest.raises(ValidationError, match="negative diagonal"):
            ReferenceEffects(
                effects=np.array([1.0]),
                covariance=np.array([[-0.1]]),
                reference="ref",
                treatments=TreatmentSet(("ref", "A")),
            )


def pairwise_n3(direction=Direction.LARGER) -> PairwiseEffects:
    """Effects (0, 1, 2) against a common anchor, all pairwise SEs = 1."""
    mu = np.array([0.0, 1.0, 2.0])
    theta = mu[:, None] - mu[None, :]
    se = np.ones((3, 3)) - np.eye(3)
    return PairwiseEffects(theta=theta, se=se, treatments=treatments(3, direction))


class TestPScores:
    def test_two_treatments_equal(self):
        theta = np.array([[0.0, 0.0], [0.0, 0.0]])
        se = np.array([[0.0, 2.0], [2.0, 0.0]])
        p = PairwiseEffects(theta=theta, se=se, treatments=treatments(2))
        np.testing.assert_array_equal(pscore_from_pairwise(p).scores, [0.5, 0.5])

    def test_two_treatments_borderline(self):
        theta = np.array([[0.0, 1.96], [-1.96, 0.0]])
        se = np.ones((2, 2)) - np.eye(2)
        p = PairwiseEffects(theta=theta, se=se, treatments=treatments(2))
        np.testing.assert_allclose(pscore_from_pairwise(p).scores, [0.975, 0.025], atol=1e-4)

    def test_three_treatments(self):
        p = pairwise_n3()
        scores = pscore_from_pairwise(p).scores
        np.testing.assert_allclose(scores, [0.09070, 0.5, 0.90930], atol=1e-4)
        oracle = oracles.pscores(p.theta.tolist(), p.se.tolist())
        np.testing.assert_allclose(scores, oracle, atol=1e-14)

    def test_mean_is_half(self):
        assert abs(float(pscore_from_pairwise(pairwise_n3()).scores.mean()) - 0.5) <= 1e-10

    def test_direction_flip_is_exact_complement(self):
        larger = pscore_from_pairwise(pairwise_n3(Direction.LARGER)).scores
        smaller = pscore_from_pairwise(pairwise_n3(Direction.SMALLER)).scores
        np.testing.assert_array_equal(smaller, 1.0 - larger)

    @settings(max_examples=40)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8))
    def test_matches_brute_force(self, seed, n):
        rng = np.random.default_rng(seed)
        mu = rng.normal(size=n)
        theta = mu[:, None] - mu[None, :]
        se = np.abs(rng.normal(size=(n, n))) + 0.1
        se = (se + se.T) / 2
        np.fill_diagonal(se, 0.0)
        p = PairwiseEffects(theta=theta, se=se, treatments=treatments(n))
        expect = oracles.pscores(theta.tolist(), se.tolist())
        np.testing.assert_allclose(pscore_from_pairwise(p).scores, expect, atol=1e-12)

    @settings(max_examples=30)
    @given(exponent=st.integers(-20, 20))
    def test_scaling_invariance_exact_for_power_of_two(self, exponent):
        c = 2.0**exponent
        base = pairwise_n3()
        scaled = PairwiseEffects(theta=base.theta * c, se=base.se * c, treatments=base.treatments)
        np.testing.assert_array_equal(
            pscore_from_pairwise(scaled).scores, pscore_from_pairwise(base).scores
        )

    @settings(max_examples=30)
    @given(c=st.floats(1e-3, 1e3, allow_nan=False))
    def test_scaling_invariance_general(self, c):
        base = pairwise_n3()
        scaled = PairwiseEffects(theta=base.theta * c, se=base.se * c, treatments=base.treatments)
        np.testing.assert_allclose(
            pscore_from_pairwise(scaled).scores, pscore_from_pairwise(base).scores, atol=1e-12
        )

    def test_non_positive_se_rejected(self):
        theta = np.array([[0.0, 1.0], [-1.0, 0.0]])
        se = np.array([[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValidationError, match="must be positive"):
            PairwiseEffects(theta=theta, se=se, treatments=treatments(2))

    def test_asymmetric_theta_rejected(self):
        theta = np.array([[0.0, 1.0], [-0.5, 0.0]])
        se = np.ones((2, 2)) - np.eye(2)
        with pytest.raises(ValidationError, match="antisymmetric"):
            PairwiseEffects(theta=theta, se=se, treatments=treatments(2))


class TestSubsetPScore:
    def test_full_set_is_bit_identical(self):
        p = pairwise_n3()
        full = pscore_from_pairwise(p)
        sub = subset_pscore(p, labels(3))
        np.testing.assert_array_equal(sub.scores, full.scores)
        assert sub.treatments.labels == full.treatments.labels

    def test_pair_subset(self):
        sub = subset_pscore(pairwise_n3(), ["T1", "T3"])
        np.testing.assert_allclose(sub.scores, [0.02275, 0.97725], atol=1e-4)
        np.testing.assert_allclose(
            sub.scores, [normal_cdf(-2.0), 1.0 - normal_cdf(-2.0)], atol=1e-15
        )

    def test_all_zero_effects(self):
        theta = np.zeros((3, 3))
        se = np.ones((3, 3)) - np.eye(3)
        p = PairwiseEffects(theta=theta, se=se, treatments=treatments(3))
        np.testing.assert_array_equal(subset_pscore(p, ["T1", "T2"]).scores, [0.5, 0.5])

    def test_subset_too_small(self):
        with pytest.raises(ValidationError, match="at least 2"):
            subset_pscore(pairwise_n3(), ["T1"])

    def test_unknown_id(self):
        with pytest.raises(ValidationError, match="unknown treatment"):
            subset_pscore(pairwise_n3(), ["T1", "Z"])

    def test_subset_mean_is_half(self):
        sub = subset_pscore(pairwise_n3(), ["T1", "T3"])
        assert abs(float(sub.scores.mean()) - 0.5) <= 1e-10


class TestNormalCdf:
    def test_high_precision_against_mpmath(self):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 40
        for z in (-8.0, -3.5, -1.0, -0.1, 0.0, 0.3, 1.96, 2.5, 6.0):
            expect = float(0.5 * mpmath.erfc(-z / mpmath.sqrt(2)))
            assert abs(float(normal_cdf(z)) - expect) <= 1e-12

    def test_complement_symmetry(self):
        for z in np.linspace(-6, 6, 25):
            assert abs(float(normal_cdf(z) + normal_cdf(-z)) - 1.0) <= 1e-15


class TestScoreVector:
    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError, match=r"outside \[0, 1\]"):
            ScoreVector(np.array([1.2, 0.5, 0.0]), kind="sucra", treatments=treatments(3))

    def test_tiny_overshoot_clamped(self):
        s = ScoreVector(np.array([1.0 + 1e-9, 0.5, -1e-9]), kind="sucra", treatments=treatments(3))
        assert s.scores[0] == 1.0
        assert s.scores[2] == 0.0

    def test_bad_kind(self):
        with pytest.raises(ValidationError, match="kind"):
            ScoreVector(np.array([0.5, 0.5]), kind="other", treatments=treatments(2))

    def test_mean_deviation(self):
        s = ScoreVector(np.array([0.411, 0.472, 0.530, 0.586]), kind="sucra", treatments=treatments(4))
        assert s.mean_deviation() == pytest.approx(0.00025, abs=1e-12)
