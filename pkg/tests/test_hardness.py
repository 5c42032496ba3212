import math

import numpy as np
import pytest

from regsamp.errors import (
    ApplicabilityError,
    ConfigurationError,
    ConstructionError,
    InvalidInputError,
)
from regsamp.hardness import (
    adversarial_relative_error,
    check_failure,
    gen_coupon_relu,
    gen_lin_logistic,
    gen_lin_relu,
    gen_lin_sigmoid,
    gen_moment_curve,
    gen_quad_hinge,
    gen_quad_logistic,
    gen_quad_relu,
    gen_quad_sigmoid,
    generate,
    isolating_direction,
    reduction_scale,
)
from regsamp.losses import L1, L2, L2SQ, eval_loss, make_loss, make_reg
from regsamp.objective import full_objective, relative_error
from regsamp.sampler import (
    WeightedSample,
    atom_weights,
    draw_iid,
    score_array,
    weight,
)


def sample_atoms(hard, indices):
    inst = hard.instance
    w = atom_weights(inst, hard.score_kind, hard.convention)
    s = score_array(hard.score_kind, inst.atoms)
    return [WeightedSample(int(i), inst.atoms[i], float(w[i]), float(s[i]))
            for i in indices]


class TestQuadLogistic:
    def test_dimension_formula(self):
        hard = gen_quad_logistic(8.0, 0.05)
        assert hard.params["d"] == 16  # ceil(2 (8 ln2 / 2)^2) = ceil(15.37)

    def test_boundary_sizing(self):
        eps = 0.0625
        k = 40.0 * eps / math.log(2.0)
        hard = gen_quad_logistic(k, eps)
        assert hard.params["d"] == 2

    def test_eps_range(self):
        with pytest.raises(InvalidInputError):
            gen_quad_logistic(8.0, 0.2)

    def test_rescaled_objective_at_adversarial_query(self):
        # with d/2 an exact square the rescaled value is 1/2 + c + 1/(40 eps)
        k = 8.0
        eps = k * math.log(2.0) / 80.0  # makes d = 8 exactly
        hard = gen_quad_logistic(k, eps)
        assert hard.params["d"] == 8
        x = hard.queries.queries[1]
        _, f = full_objective(hard.instance, hard.spec, x)
        c = hard.params["c"]
        assert f / math.log(2.0) == pytest.approx(0.5 + c + 1.0 / (40.0 * eps), abs=1e-12)

    def test_c_constant(self):
        hard = gen_quad_logistic(8.0, 0.05)
        assert hard.params["c"] == pytest.approx(0.225971, abs=1e-6)

    def test_origin_always_in_queries(self):
        hard = gen_quad_logistic(8.0, 0.05)
        assert np.all(hard.queries.queries[0] == 0.0)


class TestQuadSigmoid:
    def test_dimension_formula(self):
        hard = gen_quad_sigmoid(20.0, 0.1)
        assert hard.params["d"] == 8  # ceil(2 * (10/5)^2)

    def test_c_constant(self):
        hard = gen_quad_sigmoid(20.0, 0.1)
        assert hard.params["c"] == pytest.approx(1.0 / (1.0 + math.e), abs=1e-15)
        assert hard.params["c"] < 0.3
        assert hard.params["scale"] == 2.0


class TestQuadHinge:
    def test_atom_norms(self):
        hard = gen_quad_hinge(8.0, 0.2)
        norms_sq = np.sum(hard.instance.atoms ** 2, axis=1)
        assert np.allclose(norms_sq, 1.5, atol=1e-12)

    def test_margins_at_adversarial_query(self):
        hard = gen_quad_hinge(8.0, 1.0 / 6.0)
        d = hard.params["d"]
        h = hard.params["half"]
        x = hard.queries.queries[1]
        margins = hard.instance.atoms @ x
        loss = make_loss("hinge")
        # isolated atoms lose 1/sqrt(d-1) when d-1 = 2h, the rest exactly 0
        assert np.allclose(margins[h:], 1.0, atol=1e-12)
        assert np.allclose(np.asarray(eval_loss(loss, margins[h:])), 0.0, atol=1e-12)
        assert np.allclose(np.asarray(eval_loss(loss, margins[:h])),
                           1.0 / math.sqrt(2 * h), atol=1e-12)

    def test_regularizer_value(self):
        hard = gen_quad_hinge(8.0, 1.0 / 6.0, reg=L2SQ)
        x = hard.queries.queries[1]
        from regsamp.losses import eval_regularizer

        assert eval_regularizer(make_reg(L2SQ), x) == pytest.approx(2.0, abs=1e-12)
        assert eval_regularizer(make_reg(L2), x) == pytest.approx(math.sqrt(2.0), abs=1e-12)


class TestQuadRelu:
    def test_dimension_and_nominal_objective(self):
        eps = 1.0 / 6.0
        hard = gen_quad_relu(6.0, eps)
        assert hard.params["d"] == 36
        x = hard.queries.queries[1]
        f0, _ = full_objective(hard.instance, hard.spec, x)
        assert f0 == pytest.approx(1.0 / 12.0, abs=1e-12)
        # with the construction's stated regularizer value the objective is
        # (2 + 6 eps)/(2k) = 0.25
        f_nominal = f0 + hard.params["reg_nominal"] / hard.spec.k
        assert f_nominal == pytest.approx((2.0 + 6.0 * eps) / (2.0 * hard.spec.k), abs=1e-12)
        assert f_nominal == pytest.approx(0.25, abs=1e-12)

    def test_missing_half_error_value(self):
        eps = 1.0 / 6.0
        hard = gen_quad_relu(6.0, eps)
        samples = sample_atoms(hard, list(range(18, 36)))
        err_x, err_0 = adversarial_relative_error(hard, samples)
        assert err_x == pytest.approx(3.0 * eps / (1.0 + 3.0 * eps), abs=1e-9)
        assert err_x == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert math.isnan(err_0)
        assert check_failure(hard, samples, eps).failed

    def test_exhaustive_sample_not_failed(self):
        eps = 0.2
        hard = gen_quad_relu(4.0, eps)
        samples = sample_atoms(hard, list(range(hard.instance.n)) * 3)
        assert not check_failure(hard, samples, eps).failed


class TestLinRelu:
    def test_construction_size(self):
        hard = gen_lin_relu(8)
        assert hard.instance.n == 16
        assert np.allclose(hard.instance.masses, 1.0 / 16.0)
        assert len([t for t in hard.queries.tags if t == "adversarial"]) == 16

    def test_k_precondition(self):
        with pytest.raises(InvalidInputError):
            gen_lin_relu(1)

    def test_objective_at_isolating_query(self):
        k = 8
        hard = gen_lin_relu(k)
        x = hard.queries.queries[1]  # first adversarial query (after origin)
        f0, f = full_objective(hard.instance, hard.spec, x)
        assert f0 == pytest.approx(1.0 / (2.0 * k), abs=1e-12)
        assert f == pytest.approx(3.0 / (2.0 * k), abs=1e-12)

    def test_predicate_example(self):
        # m = 100, k = 10, uniform scores: mu = 5, threshold 1.5; a count of 7 fails
        k, m = 10, 100
        hard = gen_lin_relu(k)
        counts = [7, 4, 4] + [5] * 17
        indices = [i for i, c in enumerate(counts) for _ in range(c)]
        assert len(indices) == m
        samples = sample_atoms(hard, indices)
        verdict = check_failure(hard, samples, 0.1)
        assert verdict.failed
        assert verdict.threshold == pytest.approx(1.5)
        assert np.array_equal(verdict.witness_query, -hard.instance.atoms[0])

    def test_exact_proportions_not_failed(self):
        k = 10
        hard = gen_lin_relu(k)
        samples = sample_atoms(hard, range(2 * k))  # one of each: counts = mu
        assert not check_failure(hard, samples, 0.1).failed

    def test_verdict_deterministic(self):
        hard = gen_lin_relu(6)
        samples = sample_atoms(hard, [0, 0, 0, 1, 2, 3])
        v1 = check_failure(hard, samples, 0.25)
        v2 = check_failure(hard, samples, 0.25)
        assert v1.failed == v2.failed
        assert np.array_equal(v1.witness_query, v2.witness_query)


class TestLinLogistic:
    def test_alpha_matches_identity(self):
        hard = gen_lin_logistic(10)
        alpha = hard.params["alpha"]
        assert alpha == pytest.approx(2.2522, abs=1e-4)
        loss = make_loss("logistic")
        assert 10.0 * eval_loss(loss, alpha) == pytest.approx(1.0, abs=1e-12)

    def test_margins(self):
        k = 10
        hard = gen_lin_logistic(k)
        alpha = hard.params["alpha"]
        adv = hard.queries.queries[1:]
        for j in range(k):
            margins = hard.instance.atoms @ adv[j]
            assert margins[j] == pytest.approx(-alpha, abs=1e-12)
            others = np.delete(margins, j)
            assert np.allclose(others, alpha, atol=1e-12)

    def test_log_identity_at_alpha(self):
        hard = gen_lin_logistic(10)
        alpha = hard.params["alpha"]
        loss = make_loss("logistic")
        assert eval_loss(loss, -alpha) - eval_loss(loss, alpha) == pytest.approx(
            alpha, abs=1e-10)

    def test_threshold_factor_by_reg(self):
        alpha = gen_lin_logistic(10, reg=L1).params["alpha"]
        assert gen_lin_logistic(10, reg=L1).params["threshold_factor"] == pytest.approx(
            2.0 + 10.0)
        assert gen_lin_logistic(10, reg=L2SQ).params["threshold_factor"] == pytest.approx(
            2.0 + 10.0 * alpha)

    def test_k_precondition(self):
        with pytest.raises(InvalidInputError):
            gen_lin_logistic(3)

    def test_mean_weight_band_failure(self):
        # all atoms share one score, so uniformly scaled weights are consistent
        # with an estimated score mass; the off-band mean must fail at the origin
        hard = gen_lin_logistic(8)
        base = sample_atoms(hard, range(8))
        skew = [WeightedSample(s.atom_index, s.a, 1.5 * s.w, s.s) for s in base]
        verdict = check_failure(hard, skew, 0.2)
        assert verdict.failed
        assert not np.any(verdict.witness_query != 0.0)

    def test_inconsistent_weights_rejected(self):
        hard = gen_lin_logistic(8)
        base = sample_atoms(hard, [0, 1, 2, 3])
        broken = base[:3] + [WeightedSample(base[3].atom_index, base[3].a,
                                            0.5 * base[3].w, base[3].s)]
        with pytest.raises(ConfigurationError):
            check_failure(hard, broken, 0.2)


class TestLinSigmoid:
    def test_alpha_and_g(self):
        hard = gen_lin_sigmoid(10)
        alpha = hard.params["alpha"]
        assert alpha == pytest.approx(math.log(9.0), abs=1e-12)
        loss = make_loss("sigmoid")
        assert eval_loss(loss, alpha) == pytest.approx(0.1, abs=1e-12)

    def test_symmetry_gap(self):
        for k in (4, 10, 50):
            hard = gen_lin_sigmoid(k)
            alpha = hard.params["alpha"]
            loss = make_loss("sigmoid")
            h_alpha = 1.0 - 2.0 * eval_loss(loss, alpha)
            assert h_alpha == pytest.approx(1.0 - 2.0 / k, abs=1e-12)
            assert 0.5 <= h_alpha <= 1.0

    def test_threshold_factor(self):
        hard = gen_lin_sigmoid(10, reg=L2SQ)
        alpha = hard.params["alpha"]
        assert hard.params["threshold_factor"] == pytest.approx(4.0 + 20.0 * alpha ** 2)


class TestCouponRelu:
    def test_alpha_formula(self):
        hard = gen_coupon_relu(3, 9.0)
        assert hard.params["alpha"] == pytest.approx(2.0, abs=1e-15)

    def test_full_objective_at_query(self):
        d, k = 8, 6.0
        hard = gen_coupon_relu(d, k)
        alpha = hard.params["alpha"]
        x = hard.queries.queries[1]
        f0, f = full_objective(hard.instance, hard.spec, x)
        assert f0 == pytest.approx(alpha / d, abs=1e-12)
        assert f == pytest.approx(alpha / d + alpha * alpha / k, abs=1e-12)

    def test_missed_atom_fails_with_error_point_six(self):
        d, k = 8, 6.0
        hard = gen_coupon_relu(d, k)
        samples = sample_atoms(hard, [1, 2, 3, 4, 5, 6, 7])  # atom 0 missed
        verdict = check_failure(hard, samples, 0.25)
        assert verdict.failed
        err = relative_error(hard.instance, hard.spec, samples, verdict.witness_query)
        assert err == pytest.approx(0.6, abs=1e-12)

    def test_complete_sample_not_failed(self):
        hard = gen_coupon_relu(6, 4.0)
        samples = sample_atoms(hard, range(6))
        assert not check_failure(hard, samples, 0.25).failed


class TestIsolatingDirection:
    def test_two_point_line(self):
        atoms = np.array([[-1.0], [1.0]])
        x = isolating_direction(atoms, 0)
        margins = atoms @ x
        assert margins[0] < 0 <= margins[1]

    def test_interior_point_is_infeasible(self):
        atoms = np.array([[-1.0], [0.0], [1.0]])
        with pytest.raises(ConstructionError):
            isolating_direction(atoms, 1, max_iters=300)

    def test_documented_directions_satisfy_pattern(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        atoms = np.vander(t, 3, increasing=True)
        for x, j in (([0.0, -1.5, 1.0], 0), ([3.75, -4.0, 1.0], 1)):
            margins = atoms @ np.asarray(x)
            assert margins[j] < 0
            assert np.all(np.delete(margins, j) >= 0)

    def test_expected_margins_of_quadratic_witness(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        atoms = np.vander(t, 3, increasing=True)
        margins = atoms @ np.array([3.75, -4.0, 1.0])
        assert np.allclose(margins, [0.75, -0.25, 0.75, 3.75], atol=1e-12)


class TestMomentCurve:
    def test_construction_counts(self):
        hard = gen_moment_curve(6, 2)
        assert hard.instance.n == 6
        assert hard.instance.dim == 3
        assert len([t for t in hard.queries.tags if t == "adversarial"]) == 18

    def test_preconditions(self):
        with pytest.raises(InvalidInputError):
            gen_moment_curve(3, 3)
        with pytest.raises(InvalidInputError):
            gen_moment_curve(4, 2, t_values=[1.0, 1.0, 2.0, 3.0])

    def test_sign_patterns_verified(self):
        hard = gen_moment_curve(12, 4)
        dirs = hard.params["directions"]
        for j in range(12):
            margins = hard.instance.atoms @ dirs[j]
            assert margins[j] < 0
            assert np.all(np.delete(margins, j) >= -1e-12)

    def test_count_predicate(self):
        hard = gen_moment_curve(6, 2)
        from regsamp.sampler import atom_probabilities

        q = atom_probabilities(hard.instance, hard.score_kind, hard.convention)
        m = 60
        exact = np.round(m * q).astype(int)
        # craft counts far from one mean
        indices = [i for i, c in enumerate(exact) for _ in range(c)]
        samples = sample_atoms(hard, indices)
        verdict = check_failure(hard, samples, 0.5)
        # rounding keeps all counts within 50% of their means here
        mu = len(indices) * q
        assert verdict.failed == bool(np.any(np.abs(exact - mu) > 0.5 * mu))

    def test_mixture_samples_rejected(self):
        hard = gen_moment_curve(6, 2)
        samples = draw_iid(hard.instance, hard.score_kind, 30, seed=3,
                           convention="mixture")
        with pytest.raises(ConfigurationError):
            check_failure(hard, samples, 0.25)


class TestReductionScale:
    def test_logistic_limit(self):
        loss = make_loss("logistic")
        beta = 1e6
        assert float(eval_loss(loss, beta * -1.0)) / beta == pytest.approx(1.0, abs=1e-6)

    def test_hinge_exact_form(self):
        loss = make_loss("hinge")
        beta = 1e6
        val = float(eval_loss(loss, beta * -1.0)) / beta
        assert val == (1.0 + beta) / beta

    def test_identity_at_beta_one(self):
        x = np.array([1.0, -2.0])
        out = reduction_scale(make_loss("logistic"), make_reg(L2), x, 1.0)
        assert np.array_equal(out, x)

    def test_scales_query(self):
        x = np.array([0.5, 0.5])
        out = reduction_scale(make_loss("hinge"), make_reg(L1), x, 8.0)
        assert np.array_equal(out, 8.0 * x)

    def test_l2sq_inapplicable(self):
        with pytest.raises(ApplicabilityError):
            reduction_scale(make_loss("logistic"), make_reg(L2SQ), np.ones(2), 2.0)

    def test_relu_inapplicable(self):
        with pytest.raises(ApplicabilityError):
            reduction_scale(make_loss("relu"), make_reg(L1), np.ones(2), 2.0)


class TestGenerateDispatch:
    def test_known_kinds(self):
        assert generate("lin-relu", k=4).kind == "lin-relu"
        assert generate("quad-relu", k=4.0, eps=0.2).kind == "quad-relu"

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            generate("nope")


class TestSampledRoundTrip:
    """check_failure consumes draw_iid output directly."""

    @pytest.mark.parametrize("gen,kwargs", [
        (gen_lin_relu, {"k": 8}),
        (gen_lin_logistic, {"k": 8}),
        (gen_lin_sigmoid, {"k": 8}),
        (gen_quad_relu, {"k": 6.0, "eps": 1.0 / 6.0}),
        (gen_quad_hinge, {"k": 8.0, "eps": 0.2}),
        (gen_quad_logistic, {"k": 8.0, "eps": 0.05}),
        (gen_coupon_relu, {"d": 16, "k": 8.0}),
        (gen_moment_curve, {"N": 6, "d": 2}),
    ])
    def test_draw_and_check(self, gen, kwargs):
        hard = gen(**kwargs)
        samples = draw_iid(hard.instance, hard.score_kind, 40, seed=5,
                           convention=hard.convention)
        verdict = check_failure(hard, samples, 0.25)
        assert isinstance(verdict.failed, bool)
        if verdict.failed:
            assert verdict.witness_query is not None
