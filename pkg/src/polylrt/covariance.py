"""Space-time covariance estimation and block-Toeplitz assembly.

The lag estimator is the standard unbiased sample estimator
R[tau] = 1/(N - tau) * sum_n x[n] x^H[n - tau], extended to negative lags
by Hermitian symmetry.  Stacked covariances for a temporal window T are
laid out with block (i, j) = R[j - i], so the first block row reads
R[0], R[1], ..., R[T - 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polymat import LaurentMatrix, is_parahermitian, multiply, paraconjugate

__all__ = [
    "BlockToeplitzCov",
    "block_toeplitz",
    "condition_number",
    "estimate_csd",
    "projected_csd",
]


@dataclass(frozen=True)
class BlockToeplitzCov:
    """Stacked (block_dim * T) covariance of T concatenated snapshots."""

    T: int
    block_dim: int
    matrix: np.ndarray

    def block(self, i: int, j: int) -> np.ndarray:
        d = self.block_dim
        return self.matrix[i * d:(i + 1) * d, j * d:(j + 1) * d]


def estimate_csd(data: np.ndarray, max_lag: int) -> LaurentMatrix:
    """Unbiased lag-windowed sample CSD of an M x N data block.

    Para-Hermitian by construction: negative lags are the Hermitian
    transposes of the positive ones.
    """
    data = np.asarray(data)
    if data.ndim != 2:
        raise ValueError(f"data must be an M x N matrix, got shape {data.shape}")
    m, n = data.shape
    if max_lag < 0:
        raise ValueError("max_lag must be nonnegative")
    if max_lag >= n:
        raise ValueError(f"max_lag={max_lag} needs more than {max_lag} samples, got {n}")
    coeffs = np.zeros((2 * max_lag + 1, m, m), dtype=np.complex128)
    for tau in range(max_lag + 1):
        r = data[:, tau:] @ data[:, :n - tau].conj().T / (n - tau)
        coeffs[max_lag + tau] = r
        coeffs[max_lag - tau] = r.conj().T
    coeffs[max_lag] = (coeffs[max_lag] + coeffs[max_lag].conj().T) / 2.0
    return LaurentMatrix(coeffs, -max_lag)


def block_toeplitz(r: LaurentMatrix, T: int) -> BlockToeplitzCov:
    """Assemble the stacked covariance for a length-T window."""
    if r.rows != r.cols:
        raise ValueError(f"CSD must be square, got {r.rows}x{r.cols}")
    if T < 1:
        raise ValueError(f"window length must be >= 1, got {T}")
    tol = 1e-8 * max(float(np.max(np.abs(r.coeffs))), 1e-300)
    if not is_parahermitian(r, tol):
        raise ValueError("block_toeplitz input is not para-Hermitian")
    m = r.rows
    out = np.zeros((m * T, m * T), dtype=np.complex128)
    for i in range(T):
        for j in range(T):
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = r.at_lag(j - i)
    return BlockToeplitzCov(T, m, out)


def projected_csd(r: LaurentMatrix, q_perp: LaurentMatrix) -> LaurentMatrix:
    """CSD of the subspace-projected data, Q_perp^P(z) R(z) Q_perp(z)."""
    if r.rows != r.cols:
        raise ValueError(f"CSD must be square, got {r.rows}x{r.cols}")
    if q_perp.rows != r.cols:
        raise ValueError(
            f"dimension mismatch: R is {r.rows}x{r.cols}, Q_perp has {q_perp.rows} rows")
    return multiply(paraconjugate(q_perp), multiply(r, q_perp))


def condition_number(a: np.ndarray) -> float:
    """Ratio of extreme singular values; +inf when numerically singular."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"condition number needs a square matrix, got shape {a.shape}")
    s = np.linalg.svd(a, compute_uv=False)
    smax, smin = float(s[0]), float(s[-1])
    if smin <= smax * np.finfo(float).eps or smax == 0.0:
        return float("inf")
    return smax / smin
