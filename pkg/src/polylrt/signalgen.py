"""Ground-truth source models and complex Gaussian measurement streams.

A scenario consists of L stationary unit-variance sources reaching M > L
sensors through a convolutive mixing system H(z) of order J, additive
complex Gaussian noise of variance sigma_v2, and an optional weak transient
source arriving through its own steering filter h_t(z).

The mixing system is built as a random paraunitary matrix (restricted to L
columns) times a diagonal of random FIR innovation filters, which keeps the
ground-truth cross-spectral density exactly computable.  All randomness is
driven by an explicit numpy Generator so that a (config, seed) pair fixes
every stream bit for bit.

Complex Gaussian convention: CN(0, s2) has total variance s2, split evenly
between real and imaginary parts.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import polymat
from .polymat import LaurentMatrix, identity, multiply, paraconjugate, scale

__all__ = [
    "ScenarioConfig",
    "SourceModel",
    "build_mixing_system",
    "generate_measurements",
    "ground_truth_csd",
    "random_paraunitary",
]


@dataclass(frozen=True)
class ScenarioConfig:
    """Experiment parameters.

    transient_db_below may be math.inf to disable the transient entirely.
    transient_order overrides the steering-filter order (defaults to J);
    max_lag overrides the covariance estimator support (defaults to 2J).
    """

    M: int
    L: int
    J: int
    snr_db: float
    transient_db_below: float
    sigma_v2: float
    num_snapshots: int
    T_range: tuple[int, ...]
    num_trials: int
    seed: int
    transient_order: int | None = None
    max_lag: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "T_range", tuple(int(t) for t in self.T_range))
        if not self.M > self.L >= 1:
            raise ValueError(f"need M > L >= 1, got M={self.M}, L={self.L}")
        if self.J < 0:
            raise ValueError(f"mixing order J must be >= 0, got {self.J}")
        if self.num_snapshots <= 0:
            raise ValueError("num_snapshots must be positive")
        if not self.T_range or any(t < 1 for t in self.T_range):
            raise ValueError("every T in T_range must be >= 1")
        if self.sigma_v2 <= 0:
            raise ValueError("sigma_v2 must be positive")
        if self.num_trials < 2:
            raise ValueError("num_trials must be at least 2")

    @property
    def effective_max_lag(self) -> int:
        return 2 * self.J if self.max_lag is None else self.max_lag

    @property
    def effective_transient_order(self) -> int:
        return self.J if self.transient_order is None else self.transient_order

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        raw = json.loads(Path(path).read_text())
        if "transient_db_below" in raw:
            raw["transient_db_below"] = float(raw["transient_db_below"])
        if "T_range" in raw:
            raw["T_range"] = tuple(raw["T_range"])
        return cls(**raw)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")


@dataclass(frozen=True)
class SourceModel:
    """Generated ground truth: mixing system, transient steering, power."""

    H: LaurentMatrix
    h_t: LaurentMatrix
    sigma_t2: float


def _random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / math.sqrt(2.0)
    return v / np.linalg.norm(v)


def random_paraunitary(dim: int, order: int,
                       rng: np.random.Generator) -> LaurentMatrix:
    """Random paraunitary matrix of the given polynomial order.

    Built as a random constant unitary times `order` elementary factors
    I - v v^H + z^{-1} v v^H with random unit-norm complex v.  Each factor
    raises the order by one, so the result has order exactly `order` for
    generic draws.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    out = polymat.constant(_random_unitary(dim, rng))
    eye = np.eye(dim, dtype=np.complex128)
    for _ in range(order):
        v = _random_unit_vector(dim, rng)
        outer = np.outer(v, v.conj())
        factor = LaurentMatrix(np.stack([eye - outer, outer]), 0)
        out = multiply(out, factor)
    return out


# Stationary-source spectra are shaped as broadband processes with one wide
# stopband each: the innovation zeros cluster near the unit circle around a
# random centre frequency.  Smooth low-dynamic-range spectra would leave the
# stacked measurement covariance too benign, masking the small-window
# handicap that temporal correlation imposes on the measurement-domain
# detector.  The zero radius shrinks quickly with the mixing order: for
# long mixing systems the temporal correlation is carried by the paraunitary
# stage and the per-source spectra stay close to white, so that no spectral
# feature is resolvable within the window lengths under study.
_NOTCH_ZERO_RADIUS = 0.88
_NOTCH_ANGLE_SPREAD = 0.5
_NOTCH_REFERENCE_ORDER = 10

# Per-source power spread (dB): sources arrive with unequal strengths, which
# widens the eigenvalue spread of the stacked measurement covariance.
_SOURCE_POWER_SPREAD_DB = 10.0


def _notch_radius(j: int) -> float:
    if j <= _NOTCH_REFERENCE_ORDER:
        return _NOTCH_ZERO_RADIUS
    return _NOTCH_ZERO_RADIUS * float(_NOTCH_REFERENCE_ORDER / j) ** 4


def _notched_innovation(order: int, radius: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Unit-energy FIR innovation filter with a clustered-zero stopband."""
    centre = rng.uniform(0.0, 2.0 * np.pi)
    c = np.ones(1, dtype=np.complex128)
    for _ in range(order):
        ang = centre + rng.uniform(-_NOTCH_ANGLE_SPREAD, _NOTCH_ANGLE_SPREAD)
        c = np.convolve(c, np.array([1.0, -radius * np.exp(1j * ang)]))
    return c / np.linalg.norm(c)


def _smooth_innovation(order: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-energy FIR innovation filter with i.i.d. Gaussian coefficients."""
    c = (rng.standard_normal(order + 1)
         + 1j * rng.standard_normal(order + 1)) / math.sqrt(2.0)
    return c / np.linalg.norm(c)


def build_mixing_system(config: ScenarioConfig,
                        rng: np.random.Generator) -> SourceModel:
    """Draw a ground-truth source model for the scenario.

    H(z) is a random paraunitary matrix restricted to its first L columns
    times an L x L diagonal of unit-energy notched innovation filters,
    scaled so the average per-sensor stationary power equals
    sigma_v2 * 10^(snr/10).  The transient steering filter h_t is built the
    same way from a single paraunitary column with a spectrally smooth
    innovation filter and normalised so sigma_t2 equals the average
    per-sensor transient power, set transient_db_below dB under the
    stationary power.
    """
    m, l, j = config.M, config.L, config.J
    j_d = min(4, j)
    u = random_paraunitary(m, j - j_d, rng)
    radius = _notch_radius(j)
    d_coeffs = np.zeros((j_d + 1, l, l), dtype=np.complex128)
    gains = 10.0 ** (rng.uniform(-_SOURCE_POWER_SPREAD_DB / 20.0, 0.0, size=l))
    for src in range(l):
        d_coeffs[:, src, src] = gains[src] * _notched_innovation(j_d, radius, rng)
    h = multiply(u.columns(slice(0, l)), LaurentMatrix(d_coeffs, 0))

    p_target = config.sigma_v2 * 10.0 ** (config.snr_db / 10.0)
    h = scale(h, math.sqrt(p_target * m / h.energy()))

    jt = config.effective_transient_order
    jt_d = min(4, jt)
    t_par = random_paraunitary(m, jt - jt_d, rng)
    t_filter = LaurentMatrix(_smooth_innovation(jt_d, rng).reshape(-1, 1, 1), 0)
    h_t = multiply(t_par.columns(slice(0, 1)), t_filter)
    h_t = scale(h_t, math.sqrt(m / h_t.energy()))

    if math.isinf(config.transient_db_below):
        sigma_t2 = 0.0
    else:
        sigma_t2 = 10.0 ** (-config.transient_db_below / 10.0) * p_target
    return SourceModel(h, h_t, sigma_t2)


def _filter_stream(h: LaurentMatrix, u: np.ndarray) -> np.ndarray:
    """Causal FIR filtering with zero initial state, x[n] = sum H[k] u[n-k]."""
    n = u.shape[1]
    x = np.zeros((h.rows, n), dtype=np.complex128)
    for k in range(h.num_lags):
        lag = h.tau_min + k
        if lag >= n:
            break
        x[:, lag:] += h.coeffs[k] @ u[:, :n - lag]
    return x


def generate_measurements(model: SourceModel, config: ScenarioConfig,
                          with_transient: bool, n_samples: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Generate an M x n_samples measurement block.

    Stationary sources are i.i.d. CN(0, 1), the transient source is
    CN(0, sigma_t2), noise is CN(0, sigma_v2 I).  Filters start from zero
    state and the warm-up samples (one filter order's worth) are dropped so
    the returned block is stationary from its first column.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    warm = max(model.H.tau_max, model.h_t.tau_max)
    n_tot = n_samples + warm
    m, l = model.H.rows, model.H.cols
    u = (rng.standard_normal((l, n_tot))
         + 1j * rng.standard_normal((l, n_tot))) / math.sqrt(2.0)
    x = _filter_stream(model.H, u)
    if with_transient and model.sigma_t2 > 0.0:
        u_t = (rng.standard_normal((1, n_tot))
               + 1j * rng.standard_normal((1, n_tot)))
        u_t *= math.sqrt(model.sigma_t2 / 2.0)
        x += _filter_stream(model.h_t, u_t)
    noise = (rng.standard_normal((m, n_tot))
             + 1j * rng.standard_normal((m, n_tot)))
    x += noise * math.sqrt(config.sigma_v2 / 2.0)
    return x[:, warm:]


def ground_truth_csd(model: SourceModel,
                     sigma_v2: float) -> tuple[LaurentMatrix, LaurentMatrix]:
    """Exact CSDs implied by the model.

    Returns R(z) = H(z) H^P(z) + sigma_v2 I (stationary plus noise) and the
    unit-variance transient contribution R_t(z) = h_t(z) h_t^P(z); the
    overall H1 CSD is R + sigma_t2 * R_t.
    """
    if sigma_v2 < 0:
        raise ValueError("sigma_v2 must be nonnegative")
    r = multiply(model.H, paraconjugate(model.H)) + scale(identity(model.H.rows), sigma_v2)
    r_t = multiply(model.h_t, paraconjugate(model.h_t))
    return r, r_t
