"""Detector construction: closed-form oracles and algebraic properties."""

import numpy as np
import pytest

from polylrt.covariance import block_toeplitz
from polylrt.lrt import (
    COND_LIMIT,
    IllConditionedError,
    TransientFactor,
    build_detector,
    build_detector_woodbury,
    condition_bounds,
    stack_snapshots,
    transient_factor,
)
from polylrt.lrt import test_statistic as lrt_statistic
from polylrt.polymat import LaurentMatrix, multiply, paraconjugate, scale
from polylrt.signalgen import ScenarioConfig, build_mixing_system


def random_hermitian_psd(k, rng, shift=1.0):
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    return z @ z.conj().T / k + shift * np.eye(k)


def reconstruct_a(det):
    return det.W.conj().T @ det.W


class TestStackSnapshots:
    def test_window_one(self):
        stream = np.arange(6, dtype=complex).reshape(2, 3)
        assert np.array_equal(stack_snapshots(stream, 1, 1), stream[:, 1])

    def test_newest_first_layout(self):
        stream = np.array([[3.0, 1.0], [4.0, 2.0]], dtype=complex)
        y = stack_snapshots(stream, 1, 2)
        assert np.array_equal(y, np.array([1.0, 2.0, 3.0, 4.0]))

    def test_block_extraction_inverts_stacking(self):
        rng = np.random.default_rng(0)
        stream = rng.standard_normal((3, 10)) + 1j * rng.standard_normal((3, 10))
        y = stack_snapshots(stream, 7, 4)
        for i in range(4):
            assert np.array_equal(y[i * 3:(i + 1) * 3], stream[:, 7 - i])

    def test_insufficient_history(self):
        stream = np.zeros((2, 5), dtype=complex)
        with pytest.raises(ValueError):
            stack_snapshots(stream, 1, 3)


class TestBuildDetector:
    def test_sherman_morrison_rank_one(self):
        # R0 = I, R1 = v v^H, ||v|| = 1  =>  A = v v^H / 2
        rng = np.random.default_rng(1)
        v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        v /= np.linalg.norm(v)
        det = build_detector(np.eye(6), np.eye(6) + np.outer(v, v.conj()))
        a = reconstruct_a(det)
        assert np.max(np.abs(a - np.outer(v, v.conj()) / 2.0)) < 1e-12
        y = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        assert abs(lrt_statistic(det, y) - abs(np.vdot(v, y)) / np.sqrt(2)) < 1e-12

    def test_equal_hypotheses_give_zero_statistic(self):
        rng = np.random.default_rng(2)
        r0 = random_hermitian_psd(5, rng)
        det = build_detector(r0, r0.copy())
        y = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        assert lrt_statistic(det, y) <= 1e-6

    def test_a_is_psd_up_to_floor(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            k = int(rng.integers(3, 10))
            r0 = random_hermitian_psd(k, rng)
            z = rng.standard_normal((k, 2)) + 1j * rng.standard_normal((k, 2))
            r01 = r0 + z @ z.conj().T
            det = build_detector(r0, r01)
            w = np.linalg.eigvalsh(reconstruct_a(det))
            assert w[0] >= -1e-8 * max(w[-1], 1e-30)

    def test_statistic_mean_square_matches_trace(self):
        # E||W y||^2 = trace(A R0) for y ~ CN(0, R0)
        rng = np.random.default_rng(4)
        k = 12
        r0 = random_hermitian_psd(k, rng)
        z = rng.standard_normal((k, 3)) + 1j * rng.standard_normal((k, 3))
        det = build_detector(r0, r0 + z @ z.conj().T / 3.0)
        a = reconstruct_a(det)
        expected = np.trace(a @ r0).real
        chol = np.linalg.cholesky(r0)
        n = 20_000
        y = chol @ (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2)
        vals = np.sum(np.abs(det.W @ y) ** 2, axis=0)
        se = vals.std(ddof=1) / np.sqrt(n)
        assert abs(vals.mean() - expected) <= 3.0 * se

    def test_monotone_in_transient_strength(self):
        rng = np.random.default_rng(5)
        k = 6
        r0 = random_hermitian_psd(k, rng)
        z = rng.standard_normal((k, 2)) + 1j * rng.standard_normal((k, 2))
        r1 = z @ z.conj().T
        a1 = reconstruct_a(build_detector(r0, r0 + r1))
        a2 = reconstruct_a(build_detector(r0, r0 + 2.0 * r1))
        w = np.linalg.eigvalsh(a2 - a1)
        assert w[0] >= -1e-8 * max(np.linalg.eigvalsh(a2)[-1], 1e-30)

    def test_ill_conditioned_raises_with_diagnostics(self):
        r0 = np.diag([1.0, 1e-14, 1.0])
        with pytest.raises(IllConditionedError) as exc:
            build_detector(r0, r0 + np.eye(3))
        assert exc.value.cond_r0 > COND_LIMIT

    def test_cond_limit_none_forces_construction(self):
        r0 = np.diag([1.0, 1e-14, 1.0])
        det = build_detector(r0, r0 + np.eye(3), cond_limit=None)
        assert det.cond_r0 > COND_LIMIT

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            build_detector(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2))

    def test_logdets_recorded(self):
        rng = np.random.default_rng(6)
        r0 = random_hermitian_psd(4, rng)
        z = rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1))
        r01 = r0 + z @ z.conj().T
        det = build_detector(r0, r01)
        assert abs(det.logdet_r0 - np.linalg.slogdet(r0)[1]) < 1e-10
        assert abs(det.logdet_r01 - np.linalg.slogdet(r01)[1]) < 1e-10


class TestWoodbury:
    def test_rank_one_matches_sherman_morrison(self):
        rng = np.random.default_rng(7)
        k = 8
        r0 = random_hermitian_psd(k, rng)
        h = rng.standard_normal((k, 1)) + 1j * rng.standard_normal((k, 1))
        det = build_detector_woodbury(r0, TransientFactor(h))
        r0inv = np.linalg.inv(r0)
        u = r0inv @ h[:, 0]
        a_expected = np.outer(u, u.conj()) / (1.0 + (h[:, 0].conj() @ u).real)
        assert np.max(np.abs(reconstruct_a(det) - a_expected)) < 1e-12

    def test_agrees_with_direct_inversion(self):
        rng = np.random.default_rng(8)
        k, t = 12, 3
        r0 = random_hermitian_psd(k, rng)
        h = rng.standard_normal((k, t)) + 1j * rng.standard_normal((k, t))
        det_w = build_detector_woodbury(r0, TransientFactor(h))
        det_d = build_detector(r0, r0 + h @ h.conj().T)
        a_w, a_d = reconstruct_a(det_w), reconstruct_a(det_d)
        assert np.linalg.norm(a_w - a_d) <= 1e-8 * np.linalg.norm(a_d)

    def test_noise_floor_case_matches_general_path(self):
        rng = np.random.default_rng(9)
        k, t, sv2 = 10, 2, 0.7
        h = rng.standard_normal((k, t)) + 1j * rng.standard_normal((k, t))
        det_w = build_detector_woodbury(sv2 * np.eye(k), TransientFactor(h))
        # closed subspace form: A = (1/sv2) H (sv2 I + H^H H)^{-1} H^H
        inner = sv2 * np.eye(t) + h.conj().T @ h
        a_closed = h @ np.linalg.inv(inner) @ h.conj().T / sv2
        assert np.max(np.abs(reconstruct_a(det_w) - a_closed)) < 1e-10

    def test_logdet_via_determinant_lemma(self):
        rng = np.random.default_rng(10)
        r0 = random_hermitian_psd(6, rng)
        h = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
        det = build_detector_woodbury(r0, TransientFactor(h))
        direct = np.linalg.slogdet(r0 + h @ h.conj().T)[1]
        assert abs(det.logdet_r01 - direct) < 1e-8


class TestTransientFactor:
    def small_steering(self, seed=11, order=3, dim=4):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((order + 1, dim, 1)) + 1j * rng.standard_normal((order + 1, dim, 1))
        return LaurentMatrix(c, 0)

    def test_constant_filter_is_block_diagonal(self):
        h0 = np.array([[1.0 + 1j], [2.0]])
        ht = transient_factor(LaurentMatrix(h0[None], 0), 2, 0.5)
        expected = np.zeros((4, 2), dtype=complex)
        expected[:2, 0] = 0.5 * h0[:, 0]
        expected[2:, 1] = 0.5 * h0[:, 0]
        assert np.array_equal(ht.matrix, expected)
        gram = ht.matrix @ ht.matrix.conj().T
        assert np.linalg.matrix_rank(gram) == 2

    def test_rank_at_most_t(self):
        h = self.small_steering(order=10)
        for t in range(1, 11):
            gram = transient_factor(h, t, 1.0).matrix
            s = np.linalg.svd(gram @ gram.conj().T, compute_uv=False)
            rank = int(np.sum(s > 1e-10 * s[0]))
            assert rank <= t

    def test_gram_matches_block_toeplitz_exactly_for_constant(self):
        h0 = np.array([[0.3 - 1j], [1.0]])
        h = LaurentMatrix(h0[None], 0)
        ht = transient_factor(h, 3, 2.0)
        bt = block_toeplitz(scale(multiply(h, paraconjugate(h)), 4.0), 3)
        assert np.linalg.norm(ht.matrix @ ht.matrix.conj().T - bt.matrix) \
            <= 1e-8 * np.linalg.norm(bt.matrix)

    def test_gram_matches_truncated_sum_oracle(self):
        # windowed assembly, element by element: block (i, j) of H_t H_t^H
        # is sigma_t^2 * sum_{tau in window} h[tau - i] h[tau - j]^H
        h = self.small_steering(seed=12, order=10, dim=3)
        sigma_t, T, d = 0.8, 6, 3
        ht = transient_factor(h, T, sigma_t)
        gram = ht.matrix @ ht.matrix.conj().T
        expected = np.zeros((d * T, d * T), dtype=complex)
        for i in range(T):
            for j in range(T):
                block = sum(np.outer(h.at_lag(tau - i)[:, 0],
                                     h.at_lag(tau - j)[:, 0].conj())
                            for tau in range(T))
                expected[i * d:(i + 1) * d, j * d:(j + 1) * d] = sigma_t ** 2 * block
        assert np.linalg.norm(gram - expected) <= 1e-10 * np.linalg.norm(expected)

    def test_gram_approximates_block_toeplitz_with_window_edges(self):
        # a steering filter concentrated at low lags keeps the energy falling
        # outside the window small, so the gram tracks the stacked covariance
        h = self.small_steering(seed=12, order=10, dim=3)
        decay = 0.3 ** np.arange(11)
        h = LaurentMatrix(h.coeffs * decay[:, None, None], 0)
        sigma_t = 0.8
        ht = transient_factor(h, 10, sigma_t)
        gram = ht.matrix @ ht.matrix.conj().T
        bt = block_toeplitz(scale(multiply(h, paraconjugate(h)), sigma_t ** 2), 10)
        rel = np.linalg.norm(gram - bt.matrix) / np.linalg.norm(bt.matrix)
        assert rel <= 0.05

    def test_rejects_non_column(self):
        with pytest.raises(ValueError):
            transient_factor(LaurentMatrix(np.zeros((1, 3, 2)), 0), 2, 1.0)


class TestConditionBounds:
    def make_model(self, **overrides):
        base = dict(M=4, L=2, J=3, snr_db=20.0, transient_db_below=20.0,
                    sigma_v2=1.0, num_snapshots=100, T_range=(1,),
                    num_trials=8, seed=13)
        base.update(overrides)
        cfg = ScenarioConfig(**base)
        return cfg, build_mixing_system(cfg, np.random.default_rng(cfg.seed))

    def test_measurement_bound_is_max_row_power(self):
        cfg, model = self.make_model()
        b = condition_bounds(model, cfg)
        row_powers = np.sum(np.abs(model.H.coeffs) ** 2, axis=(0, 2)).real
        assert abs(b.measurement_h0 - row_powers.max() / cfg.sigma_v2) < 1e-12

    def test_subspace_bound_near_two_at_noise_floor(self):
        # transient 20 dB below stationary at 20 dB SNR sits at the noise
        # floor, so the bound lands near (sigma_t2 + sigma_v2) / sigma_v2 ~ 2
        cfg, model = self.make_model()
        b = condition_bounds(model, cfg)
        assert 1.2 <= b.subspace_h1 <= 8.0
        per_sensor = model.sigma_t2 * np.sum(np.abs(model.h_t.coeffs) ** 2, axis=(0, 2)).real
        assert abs(b.subspace_h1 - (per_sensor.max() + 1.0)) < 1e-12

    def test_zero_transient_degenerates_to_one(self):
        cfg, model = self.make_model(transient_db_below=float("inf"))
        b = condition_bounds(model, cfg)
        assert b.subspace_h1 == 1.0
        assert b.subspace_h0 == 1.0
