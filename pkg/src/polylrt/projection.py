"""Noise-subspace filtering of measurement streams.

The syndrome stream is obtained by filtering the measurements with the
paraconjugate of the noise-subspace columns,

    s[n] = sum_nu Q_perp^H[-nu] x[n - nu],

an anti-causal operation; only output samples with full filter support are
returned, so the first returned column corresponds to original sample index
valid_from = order of Q_perp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import oaconvolve

from .polymat import LaurentMatrix

__all__ = ["SyndromeStream", "project"]

# Direct convolution below this work estimate, FFT overlap-add above.
_DIRECT_WORK_LIMIT = 2_000_000


@dataclass(frozen=True)
class SyndromeStream:
    """Projected data block plus the sample offset eaten by the filter.

    Column i of data holds the syndrome sample at time i - tau_min of the
    filter (a fixed offset; the noise-subspace columns are two-sided in
    general).  valid_from records how many samples of support the filter
    consumed.
    """

    data: np.ndarray
    valid_from: int


def _project_direct(q_perp: LaurentMatrix, x: np.ndarray) -> np.ndarray:
    n_out = x.shape[1] - q_perp.order
    out = np.zeros((q_perp.cols, n_out), dtype=np.complex128)
    for j in range(q_perp.num_lags):
        out += q_perp.coeffs[j].conj().T @ x[:, j:j + n_out]
    return out


def _project_fft(q_perp: LaurentMatrix, x: np.ndarray) -> np.ndarray:
    # Valid-mode convolution with the lag-reversed, conjugated coefficients
    # reproduces the direct correlation above.
    kernels = q_perp.coeffs[::-1].conj().transpose(2, 1, 0)  # (cols, rows, lags)
    full = oaconvolve(kernels, x[None, :, :], axes=-1)
    ord_ = q_perp.order
    return full[:, :, ord_:x.shape[1]].sum(axis=1)


def project(q_perp: LaurentMatrix, x: np.ndarray) -> SyndromeStream:
    """Filter an M x N block through the noise-subspace columns.

    Uses direct time-domain convolution for short filters and FFT
    overlap-add for long ones; the two paths agree to ~1e-12 relative.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2:
        raise ValueError(f"x must be an M x N matrix, got shape {x.shape}")
    if q_perp.rows != x.shape[0]:
        raise ValueError(
            f"dimension mismatch: Q_perp has {q_perp.rows} rows, data has {x.shape[0]}")
    n_out = x.shape[1] - q_perp.order
    if n_out < 1:
        raise ValueError(
            f"need more than {q_perp.order} samples for an order-{q_perp.order} filter")
    if q_perp.num_lags * x.shape[1] <= _DIRECT_WORK_LIMIT:
        data = _project_direct(q_perp, x)
    else:
        data = _project_fft(q_perp, x)
    return SyndromeStream(data, q_perp.order)
