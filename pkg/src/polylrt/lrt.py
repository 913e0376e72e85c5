"""Likelihood-ratio detector construction and evaluation.

For zero-mean complex Gaussian hypotheses with covariances R0 and R0 + R1
the log-likelihood ratio reduces to a quadratic form y^H A y with

    A = R0^{-1} - (R0 + R1)^{-1} = R0^{-1} R1 (R0 + R1)^{-1},

and the test statistic is || Lambda^{1/2} Q^H y ||_2 built from the
Hermitian EVD A = Q Lambda Q^H.  Large statistic values vote for H1.  When
R1 admits a tall factorisation R1 = H_t H_t^H the Woodbury identity gives
the same A through T x T inner solves.

Covariances whose condition number exceeds roughly 1e-3 / machine-epsilon
are rejected with IllConditionedError; those failures are expected data in
the ill-conditioned experiment regime and are never patched over by
regularisation here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .covariance import condition_number
from .polymat import LaurentMatrix
from .signalgen import ScenarioConfig, SourceModel

__all__ = [
    "COND_LIMIT",
    "ConditionBounds",
    "IllConditionedError",
    "LRTDetector",
    "TransientFactor",
    "build_detector",
    "build_detector_woodbury",
    "condition_bounds",
    "stack_snapshots",
    "test_statistic",
    "transient_factor",
]

COND_LIMIT = 1e-3 / np.finfo(float).eps


class IllConditionedError(np.linalg.LinAlgError):
    """A covariance is numerically singular; carries the condition numbers."""

    def __init__(self, cond_r0: float, cond_r01: float, limit: float):
        self.cond_r0 = cond_r0
        self.cond_r01 = cond_r01
        self.limit = limit
        super().__init__(
            f"covariance condition number beyond {limit:.3e}: "
            f"cond(R0)={cond_r0:.3e}, cond(R0+R1)={cond_r01:.3e}")


@dataclass(frozen=True)
class LRTDetector:
    """Precomputed whitener W with W^H W = A plus bookkeeping terms.

    W has one row sqrt(lambda_k) q_k^H per retained eigenvalue of A; the
    log-determinants of R0 and R0 + R1 are kept for threshold bookkeeping
    only (complex Gaussian convention).
    """

    K: int
    W: np.ndarray
    logdet_r0: float
    logdet_r01: float
    cond_r0: float
    cond_r01: float


@dataclass(frozen=True)
class TransientFactor:
    """Tall factor H_t with H_t H_t^H approximating the stacked R1."""

    matrix: np.ndarray

    @property
    def K(self) -> int:
        return self.matrix.shape[0]

    @property
    def T(self) -> int:
        return self.matrix.shape[1]


def stack_snapshots(stream: np.ndarray, n: int, T: int) -> np.ndarray:
    """Concatenate T snapshots newest first: [x[n]; x[n-1]; ...; x[n-T+1]]."""
    stream = np.asarray(stream)
    if T < 1:
        raise ValueError("T must be >= 1")
    if n < T - 1:
        raise ValueError(f"need n >= T-1 = {T - 1}, got n = {n}")
    if n >= stream.shape[1]:
        raise ValueError(f"sample index {n} beyond stream length {stream.shape[1]}")
    return stream[:, n - T + 1:n + 1][:, ::-1].T.reshape(-1)


def _validate_hermitian(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = max(float(np.linalg.norm(a)), 1e-300)
    if float(np.linalg.norm(a - a.conj().T)) > 1e-8 * scale:
        raise ValueError(f"{name} is not Hermitian")
    return (a + a.conj().T) / 2.0


def _whitener_from_eigh(a: np.ndarray, eigen_floor: float) -> np.ndarray:
    w, q = np.linalg.eigh(a)
    w_max = float(w[-1]) if w.size else 0.0
    if w_max <= 0.0:
        return np.zeros((0, a.shape[0]), dtype=np.complex128)
    keep = w >= eigen_floor * w_max
    return np.sqrt(w[keep])[:, None] * q[:, keep].conj().T


def build_detector(r0: np.ndarray, r01: np.ndarray,
                   eigen_floor: float = 1e-12,
                   cond_limit: float | None = COND_LIMIT) -> LRTDetector:
    """Build the detector from the H0 and H1 covariances.

    A is formed through linear solves as R0^{-1} R1 (R0 + R1)^{-1} rather
    than by storing explicit inverses; eigenvalues of A below
    eigen_floor * max(eig) are discarded, which also removes the
    numerically negative ones produced by cancellation.  Pass
    cond_limit=None to force construction on ill-conditioned inputs.
    """
    r0 = _validate_hermitian(r0, "R0")
    r01 = _validate_hermitian(r01, "R0+R1")
    if r0.shape != r01.shape:
        raise ValueError(f"shape mismatch: {r0.shape} vs {r01.shape}")
    cond_r0 = condition_number(r0)
    cond_r01 = condition_number(r01)
    if cond_limit is not None and (cond_r0 > cond_limit or cond_r01 > cond_limit):
        raise IllConditionedError(cond_r0, cond_r01, cond_limit)
    r1 = r01 - r0
    x = np.linalg.solve(r0, r1)
    a = np.linalg.solve(r01, x.conj().T).conj().T
    a = (a + a.conj().T) / 2.0
    w = _whitener_from_eigh(a, eigen_floor)
    sign0, logdet0 = np.linalg.slogdet(r0)
    sign1, logdet1 = np.linalg.slogdet(r01)
    return LRTDetector(r0.shape[0], w, float(logdet0), float(logdet1),
                       cond_r0, cond_r01)


def build_detector_woodbury(r0: np.ndarray, ht: TransientFactor,
                            eigen_floor: float = 1e-12,
                            cond_limit: float | None = COND_LIMIT) -> LRTDetector:
    """Detector via the Woodbury identity for the low-rank H1 update.

    A = R0^{-1} H_t (I_T + H_t^H R0^{-1} H_t)^{-1} H_t^H R0^{-1}; only the
    T x T inner system is factorised.  For R0 = sigma^2 I this reduces to
    the closed subspace form A = sigma^{-2} H_t (sigma^2 I + H_t^H H_t)^{-1} H_t^H.
    """
    r0 = _validate_hermitian(r0, "R0")
    htm = np.asarray(ht.matrix, dtype=np.complex128)
    if htm.shape[0] != r0.shape[0]:
        raise ValueError(
            f"transient factor has {htm.shape[0]} rows, R0 is {r0.shape[0]}x{r0.shape[1]}")
    k, t = htm.shape
    r01 = r0 + htm @ htm.conj().T
    cond_r0 = condition_number(r0)
    cond_r01 = condition_number(r01)
    if cond_limit is not None and (cond_r0 > cond_limit or cond_r01 > cond_limit):
        raise IllConditionedError(cond_r0, cond_r01, cond_limit)
    x = np.linalg.solve(r0, htm)
    inner = np.eye(t, dtype=np.complex128) + htm.conj().T @ x
    inner = (inner + inner.conj().T) / 2.0
    chol = np.linalg.cholesky(inner)
    f = solve_triangular(chol, x.conj().T, lower=True).conj().T  # A = F F^H
    u, s, _ = np.linalg.svd(f, full_matrices=False)
    if s.size and s[0] > 0.0:
        keep = s ** 2 >= eigen_floor * s[0] ** 2
        w = s[keep][:, None] * u[:, keep].conj().T
    else:
        w = np.zeros((0, k), dtype=np.complex128)
    sign0, logdet0 = np.linalg.slogdet(r0)
    # Determinant lemma: |R0 + Ht Ht^H| = |R0| * |I + Ht^H R0^{-1} Ht|.
    logdet1 = float(logdet0) + 2.0 * float(np.sum(np.log(np.real(np.diagonal(chol)))))
    return LRTDetector(k, w, float(logdet0), logdet1, cond_r0, cond_r01)


def transient_factor(h_t: LaurentMatrix, T: int, sigma_t: float) -> TransientFactor:
    """Block stacking matrix of the transient steering filter.

    Column tau holds the sigma_t-scaled coefficients of h_t placed at block
    offset tau, so H_t H_t^H reproduces the stacked covariance of
    sigma_t^2 h_t(z) h_t^P(z) up to lags falling outside the window.  The
    full two-sided lag support of h_t is used.
    """
    if h_t.cols != 1:
        raise ValueError(f"steering filter must be a column, got {h_t.rows}x{h_t.cols}")
    if T < 1:
        raise ValueError("T must be >= 1")
    d = h_t.rows
    out = np.zeros((d * T, T), dtype=np.complex128)
    for i in range(T):
        for tau in range(T):
            out[i * d:(i + 1) * d, tau] = sigma_t * h_t.at_lag(tau - i)[:, 0]
    return TransientFactor(out)


def test_statistic(det: LRTDetector, y: np.ndarray) -> float:
    """|| W y ||_2; large values vote for H1."""
    y = np.asarray(y)
    if y.shape != (det.K,):
        raise ValueError(f"test vector must have length {det.K}, got shape {y.shape}")
    return float(np.linalg.norm(det.W @ y))


@dataclass(frozen=True)
class ConditionBounds:
    """Theoretical condition-number lower bounds for the stacked covariances.

    measurement_h0 applies to the measurement-path H0 covariance (and its
    H1 counterpart, whose extremes are essentially the same); subspace_h0
    and subspace_h1 bound the projected-path covariances.
    """

    measurement_h0: float
    subspace_h0: float
    subspace_h1: float


def condition_bounds(model: SourceModel, config: ScenarioConfig) -> ConditionBounds:
    """Bounds sigma_s^2 / sigma_v^2 and (sigma_t^2 + sigma_v^2) / sigma_v^2.

    sigma_s^2 is the maximum per-sensor stationary power and sigma_t^2 the
    maximum per-sensor transient power, both read off the ground-truth
    filters.
    """
    sv2 = config.sigma_v2
    p_stationary = np.sum(np.abs(model.H.coeffs) ** 2, axis=(0, 2)).real
    p_transient = model.sigma_t2 * np.sum(np.abs(model.h_t.coeffs) ** 2, axis=(0, 2)).real
    sigma_s2 = float(p_stationary.max())
    sigma_t2 = float(p_transient.max())
    return ConditionBounds(sigma_s2 / sv2, 1.0, (sigma_t2 + sv2) / sv2)
