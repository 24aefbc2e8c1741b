import numpy as np
import pytest

from logitdcbm import (Adjacency, ConfigError, DomainError, ModelParams, ThetaSpec,
                       build_tilde_omega, gen_partition, gen_theta, logit_link,
                       mean_matrices, sample_adjacency, snr, substream)
from oracles import random_model_params, tilde_entry_loop


class TestGenPartition:
    def test_block_construction(self):
        labels = gen_partition(6, [2, 2, 2])
        assert labels.tolist() == [1, 1, 2, 2, 3, 3]

    def test_balanced_three_communities(self):
        labels = gen_partition(2400, [800, 800, 800])
        sizes = np.bincount(labels)[1:]
        assert sizes.tolist() == [800, 800, 800]

    def test_sum_mismatch(self):
        with pytest.raises(ConfigError):
            gen_partition(5, [2, 2, 2])

    def test_zero_size_rejected(self):
        with pytest.raises(ConfigError):
            gen_partition(4, [4, 0])

    def test_shuffle_preserves_counts_and_is_seeded(self):
        a = gen_partition(30, [10, 10, 10], rng=substream(3, 0), shuffle=True)
        b = gen_partition(30, [10, 10, 10], rng=substream(3, 0), shuffle=True)
        assert np.array_equal(a, b)
        assert np.bincount(a)[1:].tolist() == [10, 10, 10]
        assert not np.array_equal(a, gen_partition(30, [10, 10, 10]))

    def test_shuffle_requires_rng(self):
        with pytest.raises(ConfigError):
            gen_partition(4, [2, 2], shuffle=True)


class TestGenTheta:
    def test_uniform_norm_and_range(self):
        spec = ThetaSpec.uniform(0.01, 2.0, b_n=60.0)
        theta = gen_theta(spec, 2400, substream(1, 0))
        assert abs(np.linalg.norm(theta) - 60.0) <= 1e-9 * 60.0
        assert np.all(theta > 0)
        # entries proportional to draws in [0.01, 2]: ratio spread bounded by 200
        assert theta.max() / theta.min() <= 2.0 / 0.01 + 1e-9

    def test_pareto_truncation_bounds_spread(self):
        spec = ThetaSpec.pareto(scale=10.0, shape=1.0, truncation=200.0, b_n=70.0)
        theta = gen_theta(spec, 2400, substream(2, 0))
        assert abs(np.linalg.norm(theta) - 70.0) <= 1e-9 * 70.0
        # raw draws live in [10, 200], so the post-scaling spread is at most 20
        assert theta.max() / theta.min() <= 20.0 + 1e-9

    def test_pareto_truncation_at_scale_degenerates(self):
        spec = ThetaSpec.pareto(scale=10.0, shape=1.0, truncation=10.0, b_n=5.0)
        theta = gen_theta(spec, 64, substream(3, 0))
        assert np.allclose(theta, 5.0 / 8.0, rtol=0, atol=1e-12)

    def test_degenerate_uniform(self):
        spec = ThetaSpec.uniform(1.0, 1.0, b_n=10.0)
        theta = gen_theta(spec, 100, substream(4, 0))
        assert np.allclose(theta, 1.0, rtol=0, atol=1e-12)

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            ThetaSpec.uniform(2.0, 1.0, b_n=10.0)
        with pytest.raises(ConfigError):
            ThetaSpec.uniform(0.0, 1.0, b_n=10.0)
        with pytest.raises(ConfigError):
            ThetaSpec.uniform(0.5, 1.0, b_n=-1.0)
        with pytest.raises(ConfigError):
            ThetaSpec.pareto(scale=10.0, shape=-1.0, truncation=5.0, b_n=1.0)
        with pytest.raises(ConfigError):
            ThetaSpec(distribution="lognormal", b_n=1.0)


class TestTildeOmega:
    def test_same_community_unit_thetas(self):
        params = ModelParams(n=2, K=1, theta=np.ones(2), labels=np.array([1, 1]),
                             P=np.ones((1, 1)))
        tilde = build_tilde_omega(params)
        assert tilde[0, 1] == 1.0

    def test_cross_community_entry(self):
        P = np.array([[1.0, 0.5], [0.5, 1.0]])
        params = ModelParams(n=2, K=2, theta=np.array([2.0, 3.0]),
                             labels=np.array([1, 2]), P=P)
        tilde = build_tilde_omega(params)
        assert tilde[0, 1] == 3.0

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            params = random_model_params(rng, n=int(rng.integers(6, 21)),
                                         K=int(rng.choice([2, 3])))
            tilde = build_tilde_omega(params)
            expected = tilde_entry_loop(params.theta, params.labels, params.P)
            assert np.array_equal(tilde, expected)


class TestLogitLink:
    @pytest.mark.parametrize("x,om,nf", [(0.0, 0.0, 1.0), (1.0, 0.5, 0.5),
                                         (3.0, 0.75, 0.25)])
    def test_pinned_values(self, x, om, nf):
        omega, nfactor = logit_link(np.array([[x]]))
        assert omega[0, 0] == om
        assert nfactor[0, 0] == nf

    def test_negative_entry_rejected(self):
        with pytest.raises(DomainError):
            logit_link(np.array([[0.1, -0.2], [-0.2, 0.1]]))

    def test_hadamard_identity_and_range(self):
        rng = np.random.default_rng(11)
        tilde = rng.uniform(0, 10, size=(40, 40))
        tilde = 0.5 * (tilde + tilde.T)
        omega, nfactor = logit_link(tilde)
        assert np.max(np.abs(omega - nfactor * tilde)) <= 1e-12
        assert np.all(omega >= 0) and np.all(omega < 1)


class TestSampleAdjacency:
    def test_empty_and_complete(self):
        n = 30
        rng = substream(5, 0)
        empty = sample_adjacency(np.zeros((n, n)), rng)
        assert empty.edge_count() == 0
        ones = np.ones((n, n))
        complete = sample_adjacency(ones, rng)
        assert complete.edge_count() == n * (n - 1) // 2

    def test_probability_out_of_range(self):
        with pytest.raises(DomainError):
            sample_adjacency(np.full((3, 3), 1.5), substream(6, 0))

    def test_edge_frequency_within_binomial_band(self):
        # independent binomial oracle: pooled edge indicator over 500 draws
        n, reps, p = 200, 500, 0.3
        omega = np.full((n, n), p)
        rng = substream(7, 0)
        pairs = n * (n - 1) // 2
        total = 0
        for _ in range(reps):
            total += sample_adjacency(omega, rng).edge_count()
        trials = reps * pairs
        sigma = np.sqrt(p * (1 - p) / trials)
        assert abs(total / trials - p) <= 3 * sigma

    def test_structure_and_determinism(self):
        rng = np.random.default_rng(8)
        omega = rng.uniform(0, 1, size=(50, 50))
        omega = 0.5 * (omega + omega.T)
        A = sample_adjacency(omega, substream(9, 0))
        assert np.array_equal(A.dense, A.dense.T)
        assert np.all(np.diag(A.dense) == 0)
        assert set(np.unique(A.dense)) <= {0, 1}
        B = sample_adjacency(omega, substream(9, 0))
        assert np.array_equal(A.dense, B.dense)
        # neighbor lists agree with the dense view
        for i in range(50):
            assert np.array_equal(A.neighbors[i], np.flatnonzero(A.dense[i]))


class TestSnr:
    @pytest.mark.parametrize("b_n,beta,K,expected", [
        (60.0, 23.0 / 30.0, 3, 14.0),
        (70.0, 0.65, 5, 24.5),
        (50.0, 0.55, 5, 22.5),
    ])
    def test_calibrations(self, b_n, beta, K, expected):
        P = beta * np.ones((K, K)) + (1 - beta) * np.eye(K)
        assert abs(snr(b_n, P) - expected) <= 1e-9

    def test_uniform_offdiag_closed_form(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            K = int(rng.integers(2, 7))
            beta = float(rng.uniform(0.05, 0.95))
            b_n = float(rng.uniform(1, 100))
            P = beta * np.ones((K, K)) + (1 - beta) * np.eye(K)
            assert abs(snr(b_n, P) - b_n * (1 - beta)) <= 1e-9 * b_n


class TestModelInvariants:
    def test_mean_matrix_identities(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            params = random_model_params(rng, n=int(rng.integers(40, 120)))
            tilde, omega, nfactor = mean_matrices(params)
            assert np.max(np.abs(omega - nfactor * tilde)) <= 1e-12
            # logit identity wherever the community coupling is positive
            mask = tilde > 0
            lhs = np.log(omega[mask] / (1 - omega[mask]))
            block = params.P[np.ix_(params.labels - 1, params.labels - 1)]
            rhs = (np.log(params.theta)[:, None] + np.log(params.theta)[None, :]
                   + np.log(block))[mask]
            assert np.max(np.abs(lhs - rhs)) <= 1e-9

    def test_rank_K_numerically(self):
        rng = np.random.default_rng(14)
        for _ in range(10):
            params = random_model_params(rng, n=int(rng.integers(40, 120)))
            tilde = build_tilde_omega(params)
            vals = np.sort(np.abs(np.linalg.eigvalsh(tilde)))[::-1]
            assert vals[params.K] / vals[0] < 1e-10

    def test_nonlinear_perturbation_inequalities(self):
        # |lambda_{K+1}(omega)| <= ||(N - 11') o tilde|| <= max|N-1| * lambda_1(tilde)
        rng = np.random.default_rng(15)
        for _ in range(15):
            params = random_model_params(rng, n=int(rng.integers(40, 150)))
            tilde, omega, nfactor = mean_matrices(params)
            pert = (nfactor - 1.0) * tilde
            pert_norm = np.max(np.abs(np.linalg.eigvalsh(pert)))
            lam_omega = np.sort(np.abs(np.linalg.eigvalsh(omega)))[::-1]
            lam1_tilde = np.max(np.linalg.eigvalsh(tilde))
            max_dev = np.max(np.abs(nfactor - 1.0))
            assert lam_omega[params.K] <= pert_norm + 1e-9
            assert pert_norm <= max_dev * lam1_tilde + 1e-9


class TestValidation:
    def test_model_params_errors(self):
        good_P = np.array([[1.0, 0.2], [0.2, 1.0]])
        with pytest.raises(ConfigError):
            ModelParams(n=4, K=2, theta=np.array([1, 1, 1, -1.0]),
                        labels=np.array([1, 1, 2, 2]), P=good_P)
        with pytest.raises(ConfigError):
            ModelParams(n=4, K=2, theta=np.ones(4),
                        labels=np.array([1, 1, 1, 1]), P=good_P)  # community 2 empty
        with pytest.raises(ConfigError):
            ModelParams(n=4, K=2, theta=np.ones(4),
                        labels=np.array([1, 1, 2, 3]), P=good_P)
        with pytest.raises(ConfigError):
            ModelParams(n=4, K=2, theta=np.ones(4), labels=np.array([1, 1, 2, 2]),
                        P=np.array([[1.0, 0.2], [0.2, 0.9]]))  # diagonal not 1
        with pytest.raises((ConfigError, DomainError)):
            ModelParams(n=4, K=2, theta=np.ones(4), labels=np.array([1, 1, 2, 2]),
                        P=np.array([[1.0, 0.3], [0.2, 1.0]]))  # asymmetric

    def test_adjacency_errors(self):
        with pytest.raises(DomainError):
            Adjacency(np.array([[0, 2], [2, 0]]))
        with pytest.raises(DomainError):
            Adjacency(np.array([[1, 0], [0, 0]]))
        with pytest.raises(DomainError):
            Adjacency(np.array([[0, 1], [0, 0]]))
