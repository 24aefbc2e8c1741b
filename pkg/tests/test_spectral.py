import logging

import numpy as np
import pytest

from logitdcbm import (ConfigError, hamming_error, kmeans, mean_matrices, score,
                       score_embedding, substream, top_k_eigenpairs)
from logitdcbm import spectral
from logitdcbm.model import sample_adjacency
from oracles import min_wcss_exhaustive, random_model_params, wcss


def sym(rng, n, scale=1.0):
    M = rng.normal(size=(n, n)) * scale
    return 0.5 * (M + M.T)


class TestTopKEigenpairs:
    def test_magnitude_order_on_diagonal(self):
        pairs = top_k_eigenpairs(np.diag([3.0, -2.0, 1.0]), 2)
        assert pairs.values.tolist() == [3.0, -2.0]

    def test_rank_one(self):
        theta = np.array([1.0, 2.0, 2.0])
        pairs = top_k_eigenpairs(np.outer(theta, theta), 1)
        assert abs(pairs.values[0] - 9.0) <= 1e-12
        assert np.allclose(pairs.vectors[:, 0], theta / 3.0, atol=1e-12)

    def test_matches_full_spectrum_oracle(self):
        rng = np.random.default_rng(20)
        M = sym(rng, 50)
        pairs = top_k_eigenpairs(M, 5)
        full = np.linalg.eigvalsh(M)
        expected = full[np.argsort(-np.abs(full))][:5]
        assert np.max(np.abs(pairs.values - expected)) <= 1e-9

    def test_residual_and_orthonormality(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n = int(rng.integers(10, 200))
            M = sym(rng, n, scale=rng.uniform(0.1, 10))
            K = int(rng.integers(1, min(8, n) + 1))
            pairs = top_k_eigenpairs(M, K)
            norm = np.max(np.abs(np.linalg.eigvalsh(M)))
            resid = M @ pairs.vectors - pairs.vectors * pairs.values
            assert np.max(np.linalg.norm(resid, axis=0)) <= 1e-7 * norm
            gram = pairs.vectors.T @ pairs.vectors
            assert np.max(np.abs(gram - np.eye(K))) <= 1e-8

    def test_sign_convention_and_bit_identical_repeats(self):
        rng = np.random.default_rng(22)
        M = sym(rng, 60)
        a = top_k_eigenpairs(M, 4)
        b = top_k_eigenpairs(M, 4)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.vectors, b.vectors)
        for k in range(4):
            col = a.vectors[:, k]
            assert col[np.argmax(np.abs(col))] > 0

    def test_k_out_of_range(self):
        with pytest.raises(ConfigError):
            top_k_eigenpairs(np.eye(3), 4)

    def test_lanczos_path_matches_dense(self, monkeypatch):
        rng = np.random.default_rng(23)
        M = sym(rng, 150)
        dense = top_k_eigenpairs(M, 4)
        monkeypatch.setattr(spectral, "DENSE_EIGEN_LIMIT", 100)
        sparse = top_k_eigenpairs(M, 4)
        assert np.max(np.abs(dense.values - sparse.values)) <= 1e-9
        # vectors agree up to the shared sign convention
        assert np.max(np.abs(np.abs(dense.vectors) - np.abs(sparse.vectors))) <= 1e-7


class TestScoreEmbedding:
    def test_equal_vectors_give_unit_column(self):
        v = np.full(10, 1.0 / np.sqrt(10))
        pairs = spectral.EigenPairs(values=np.array([2.0, 1.0]),
                                    vectors=np.column_stack([v, v]))
        R = score_embedding(pairs, clip=5.0)
        assert np.allclose(R[:, 0], 1.0, atol=1e-12)

    def test_tiny_leading_entry_clipped(self):
        lead = np.array([1e-12, 0.5, 0.5])
        other = np.array([0.5, 0.5, 0.5])
        pairs = spectral.EigenPairs(values=np.array([2.0, 1.0]),
                                    vectors=np.column_stack([lead, other]))
        clip = np.log(100)
        R = score_embedding(pairs, clip=clip)
        assert R[0, 0] == clip

    def test_exact_zero_row_pinned_with_warning(self, caplog):
        lead = np.array([0.0, 0.5, 0.5])
        other = np.array([0.3, 0.5, 0.5])
        pairs = spectral.EigenPairs(values=np.array([2.0, 1.0]),
                                    vectors=np.column_stack([lead, other]))
        with caplog.at_level(logging.WARNING):
            R = score_embedding(pairs, clip=4.0)
        assert R[0, 0] == 4.0
        assert any("degenerate" in rec.message for rec in caplog.records)

    def test_noiseless_mean_has_K_distinct_rows(self):
        rng = np.random.default_rng(24)
        for _ in range(10):
            params = random_model_params(rng, n=int(rng.integers(30, 90)))
            tilde = mean_matrices(params)[0]
            pairs = top_k_eigenpairs(tilde, params.K)
            R = score_embedding(pairs, clip=np.log(params.n))
            distinct = np.unique(np.round(R, 8), axis=0)
            assert distinct.shape[0] == params.K


class TestKmeans:
    def test_separated_clusters_recovered(self):
        rng = np.random.default_rng(25)
        centers = np.array([[0.0, 0.0], [50.0, 0.0], [0.0, 50.0]])
        truth = np.repeat([1, 2, 3], 40)
        points = centers[truth - 1] + rng.normal(scale=0.5, size=(120, 2))
        labels = kmeans(points, 3, restarts=10, rng=substream(1, 0))
        assert hamming_error(labels, truth) == 0.0

    def test_identical_points_collapse(self):
        points = np.ones((8, 2))
        labels = kmeans(points, 2, restarts=5, rng=substream(2, 0))
        assert len(set(labels.tolist())) == 1
        assert wcss(points, labels) == 0.0

    def test_matches_exhaustive_optimum_on_small_instance(self):
        rng = np.random.default_rng(26)
        points = rng.uniform(0, 1, size=(12, 2))
        labels = kmeans(points, 3, restarts=50, rng=substream(3, 0))
        assert wcss(points, labels) <= min_wcss_exhaustive(points, 3) + 1e-9

    def test_label_permutation_equivariance(self):
        rng = np.random.default_rng(27)
        for trial in range(5):
            points = rng.normal(size=(40, 3))
            perm = rng.permutation(40)
            a = kmeans(points, 4, restarts=8, rng=substream(4, trial))
            b = kmeans(points[perm], 4, restarts=8, rng=substream(4, trial))
            assert np.array_equal(a[perm], b)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(28)
        points = rng.normal(size=(60, 2))
        a = kmeans(points, 3, restarts=12, rng=substream(5, 0))
        b = kmeans(points, 3, restarts=12, rng=substream(5, 0))
        assert np.array_equal(a, b)

    def test_too_few_points(self):
        with pytest.raises(ConfigError):
            kmeans(np.zeros((2, 1)), 3)


class TestScore:
    def test_noiseless_mean_exact_recovery(self):
        rng = np.random.default_rng(29)
        for _ in range(5):
            params = random_model_params(rng, n=int(rng.integers(40, 100)))
            tilde = mean_matrices(params)[0]
            labels = score(tilde, params.K, rng=substream(6, 0), restarts=20)
            assert hamming_error(labels, params.labels) == 0.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(30)
        params = random_model_params(rng, n=80, K=3)
        _, omega, _ = mean_matrices(params)
        A = sample_adjacency(omega, substream(7, 0)).as_float()
        a = score(A, 3, rng=substream(8, 0), restarts=10)
        b = score(2.0 * A, 3, rng=substream(8, 0), restarts=10)
        assert np.array_equal(a, b)

    def test_requires_two_communities(self):
        with pytest.raises(ConfigError):
            score(np.eye(5), 1)

    def test_population_beats_sampled_at_small_scale(self):
        # logit mean without sampling noise clusters at least as well as one sample
        rng = np.random.default_rng(31)
        errs_pop, errs_sample = [], []
        beta = 23.0 / 30.0
        P = beta * np.ones((3, 3)) + (1 - beta) * np.eye(3)
        from logitdcbm import ModelParams, ThetaSpec, gen_partition, gen_theta
        for seed in range(20):
            theta = gen_theta(ThetaSpec.uniform(0.01, 2.0, b_n=60.0), 300,
                              substream(9, seed))
            params = ModelParams(n=300, K=3, theta=theta,
                                 labels=gen_partition(300, [100, 100, 100]), P=P)
            _, omega, _ = mean_matrices(params)
            A = sample_adjacency(omega, substream(10, seed))
            e_pop = hamming_error(score(omega, 3, rng=substream(11, seed), restarts=15),
                                  params.labels)
            e_sam = hamming_error(score(A.as_float(), 3, rng=substream(12, seed),
                                        restarts=15), params.labels)
            errs_pop.append(e_pop)
            errs_sample.append(e_sam)
            assert e_sam > 0.0  # sampled network never clusters perfectly here
        assert np.mean(errs_pop) < np.mean(errs_sample)
