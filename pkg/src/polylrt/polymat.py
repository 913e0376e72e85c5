"""Matrix-valued Laurent polynomials and their basic algebra.

A :class:`LaurentMatrix` stores a finite, contiguous run of matrix
coefficients ``A[tau]`` for lags ``tau_min .. tau_min + num_lags - 1`` and
represents the polynomial matrix

    A(z) = sum_tau A[tau] z^{-tau},

so a positive lag is a delay.  This is the carrier type for convolutive
mixing systems, cross-spectral density matrices, paraunitary filter banks
and eigenvalue factors throughout the package.

Values are immutable after construction and all operations are pure
functions; instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "LaurentMatrix",
    "add",
    "constant",
    "evaluate_at",
    "from_text",
    "identity",
    "is_parahermitian",
    "is_paraunitary",
    "load_text",
    "multiply",
    "paraconjugate",
    "save_text",
    "scale",
    "to_text",
    "truncate",
    "zeros",
]


@dataclass(frozen=True)
class LaurentMatrix:
    """Dense per-lag storage of a matrix Laurent polynomial.

    coeffs holds one rows x cols complex matrix per lag, stacked along the
    first axis; the lag of ``coeffs[i]`` is ``tau_min + i``.  The lag range
    is contiguous and never empty (the zero matrix is a single all-zero
    coefficient at lag 0).
    """

    coeffs: np.ndarray
    tau_min: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        if arr.ndim != 3:
            raise ValueError(f"coeffs must be (num_lags, rows, cols), got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("a LaurentMatrix needs at least one lag")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError(f"matrix dimensions must be positive, got {arr.shape[1:]}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "tau_min", int(self.tau_min))

    @property
    def rows(self) -> int:
        return self.coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[2]

    @property
    def num_lags(self) -> int:
        return self.coeffs.shape[0]

    @property
    def tau_max(self) -> int:
        return self.tau_min + self.num_lags - 1

    @property
    def order(self) -> int:
        return self.num_lags - 1

    def lags(self) -> np.ndarray:
        return np.arange(self.tau_min, self.tau_max + 1)

    def at_lag(self, tau: int) -> np.ndarray:
        """Coefficient at lag tau; lags outside the stored range are zero."""
        if self.tau_min <= tau <= self.tau_max:
            return self.coeffs[tau - self.tau_min]
        return np.zeros((self.rows, self.cols), dtype=np.complex128)

    def energy(self) -> float:
        """Total Frobenius energy, summed over all lags."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def lag_energies(self) -> np.ndarray:
        return np.sum(np.abs(self.coeffs) ** 2, axis=(1, 2)).real

    def columns(self, sel) -> "LaurentMatrix":
        """Sub-matrix made of the selected columns (same lag range)."""
        sub = self.coeffs[:, :, sel]
        if sub.ndim == 2:
            sub = sub[:, :, None]
        return LaurentMatrix(sub, self.tau_min)

    def __matmul__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        return multiply(self, other)

    def __add__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        return add(self, other)

    def __mul__(self, c) -> "LaurentMatrix":
        return scale(self, c)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return (f"LaurentMatrix({self.rows}x{self.cols}, "
                f"lags {self.tau_min}..{self.tau_max})")


def constant(mat: np.ndarray) -> LaurentMatrix:
    """Wrap a constant matrix as a lag-0-only LaurentMatrix."""
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim == 1:
        mat = mat[:, None]
    return LaurentMatrix(mat[None, :, :], 0)


def identity(dim: int) -> LaurentMatrix:
    return constant(np.eye(dim))


def zeros(rows: int, cols: int) -> LaurentMatrix:
    return LaurentMatrix(np.zeros((1, rows, cols), dtype=np.complex128), 0)


def paraconjugate(a: LaurentMatrix) -> LaurentMatrix:
    """Hermitian transpose combined with time reversal.

    The coefficient of the result at lag tau is ``A[-tau]^H``, so applying
    the operation twice restores the input bit for bit.
    """
    flipped = np.conj(a.coeffs[::-1]).transpose(0, 2, 1)
    return LaurentMatrix(flipped, -a.tau_max)


def multiply(a: LaurentMatrix, b: LaurentMatrix) -> LaurentMatrix:
    """Polynomial matrix product, i.e. 2-D convolution over the lag axis.

    C[tau] = sum_k A[k] B[tau - k].  The lag range of the result is the
    sum of the operand ranges.  Exactly-zero coefficients of the operand
    iterated over are skipped, which keeps products with sparse factors
    (delays, elementary rotations) cheap.
    """
    if a.cols != b.rows:
        raise ValueError(
            f"incompatible inner dimensions: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    n_out = a.num_lags + b.num_lags - 1
    out = np.zeros((n_out, a.rows, b.cols), dtype=np.complex128)
    if a.num_lags <= b.num_lags:
        for i, coeff in enumerate(a.coeffs):
            if not coeff.any():
                continue
            out[i:i + b.num_lags] += coeff @ b.coeffs
    else:
        for j, coeff in enumerate(b.coeffs):
            if not coeff.any():
                continue
            out[j:j + a.num_lags] += a.coeffs @ coeff
    return LaurentMatrix(out, a.tau_min + b.tau_min)


def add(a: LaurentMatrix, b: LaurentMatrix) -> LaurentMatrix:
    """Coefficient-wise sum over the union of the two lag ranges."""
    if (a.rows, a.cols) != (b.rows, b.cols):
        raise ValueError(f"shape mismatch: {a.rows}x{a.cols} vs {b.rows}x{b.cols}")
    lo = min(a.tau_min, b.tau_min)
    hi = max(a.tau_max, b.tau_max)
    out = np.zeros((hi - lo + 1, a.rows, a.cols), dtype=np.complex128)
    out[a.tau_min - lo: a.tau_min - lo + a.num_lags] += a.coeffs
    out[b.tau_min - lo: b.tau_min - lo + b.num_lags] += b.coeffs
    return LaurentMatrix(out, lo)


def scale(a: LaurentMatrix, c) -> LaurentMatrix:
    return LaurentMatrix(a.coeffs * c, a.tau_min)


def _max_pairwise_deviation(a: LaurentMatrix, b: LaurentMatrix) -> float:
    """max over lags of ||A[tau] - B[tau]||_F, missing lags read as zero."""
    lo = min(a.tau_min, b.tau_min)
    hi = max(a.tau_max, b.tau_max)
    worst = 0.0
    for tau in range(lo, hi + 1):
        dev = float(np.linalg.norm(a.at_lag(tau) - b.at_lag(tau)))
        worst = max(worst, dev)
    return worst


def is_parahermitian(r: LaurentMatrix, tol: float) -> bool:
    """True iff R equals its own paraconjugate within tol per lag.

    Checks max_tau ||R[tau] - R[-tau]^H||_F <= tol; raises on non-square
    input.
    """
    if r.rows != r.cols:
        raise ValueError(f"para-Hermitian test needs a square matrix, got {r.rows}x{r.cols}")
    return _max_pairwise_deviation(r, paraconjugate(r)) <= tol


def is_paraunitary(q: LaurentMatrix, tol: float) -> bool:
    """True iff Q^P(z) Q(z) = I within tol per coefficient (Frobenius)."""
    if q.rows != q.cols:
        raise ValueError(f"paraunitarity test needs a square matrix, got {q.rows}x{q.cols}")
    g = multiply(paraconjugate(q), q)
    return _max_pairwise_deviation(g, identity(q.rows)) <= tol


def truncate(a: LaurentMatrix, epsilon: float) -> LaurentMatrix:
    """Trim boundary lags while the removed energy stays within budget.

    Greedy end-trimming: the boundary lag with the smaller Frobenius energy
    is removed first, as long as the cumulative removed energy does not
    exceed epsilon times the total energy of the input.  Exactly-zero
    boundary lags are always stripped.  An all-zero matrix collapses to a
    single zero coefficient at lag 0.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    energies = a.lag_energies()
    total = float(energies.sum())
    budget = epsilon * total
    lo, hi = 0, a.num_lags - 1
    removed = 0.0
    while lo < hi:
        if energies[lo] <= energies[hi]:
            if removed + energies[lo] <= budget:
                removed += energies[lo]
                lo += 1
            else:
                break
        else:
            if removed + energies[hi] <= budget:
                removed += energies[hi]
                hi -= 1
            else:
                break
    if lo == hi and energies[lo] == 0.0:
        return zeros(a.rows, a.cols)
    return LaurentMatrix(a.coeffs[lo:hi + 1], a.tau_min + lo)


def evaluate_at(a: LaurentMatrix, omega: float) -> np.ndarray:
    """Evaluate A(z) on the unit circle: sum_tau A[tau] e^{-j omega tau}."""
    phases = np.exp(-1j * omega * a.lags())
    return np.tensordot(phases, a.coeffs, axes=1)


def to_text(a: LaurentMatrix) -> str:
    """Serialize to the plain text format used by the CLI dumps.

    Header line ``rows cols tau_min num_lags``, then per lag one line per
    row holding ``re im`` pairs in column order.
    """
    lines = [f"{a.rows} {a.cols} {a.tau_min} {a.num_lags}"]
    for coeff in a.coeffs:
        for row in coeff:
            lines.append(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> LaurentMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty LaurentMatrix text")
    header = lines[0].split()
    if len(header) != 4:
        raise ValueError(f"malformed header line: {lines[0]!r}")
    rows, cols, tau_min, num_lags = (int(tok) for tok in header)
    expected = 1 + rows * num_lags
    if len(lines) != expected:
        raise ValueError(f"expected {expected} lines, got {len(lines)}")
    coeffs = np.zeros((num_lags, rows, cols), dtype=np.complex128)
    idx = 1
    for k in range(num_lags):
        for i in range(rows):
            vals = [float(tok) for tok in lines[idx].split()]
            if len(vals) != 2 * cols:
                raise ValueError(f"row {idx} has {len(vals)} numbers, expected {2 * cols}")
            coeffs[k, i] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
            idx += 1
    return LaurentMatrix(coeffs, tau_min)


def save_text(a: LaurentMatrix, path) -> None:
    Path(path).write_text(to_text(a))


def load_text(path) -> LaurentMatrix:
    return from_text(Path(path).read_text())
