"""Lower-triangular Toeplitz convolution operators in the Laguerre domain.

Convolution with a kernel g maps Laguerre coefficients theta to q = G theta,
where G is lower triangular Toeplitz with first column
(g_0, g_1 - g_0, g_2 - g_1, ...).  This module builds G from kernel
coefficients, solves triangular systems by forward substitution, and tracks
how fast the inverse norms ||(G^(m))^-1|| grow with the dimension m - the
quantity that drives both the truncation rule for M and the threshold levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .laguerre import LagCoeffs

__all__ = [
    "LowerToeplitz",
    "InverseNormTable",
    "SingularOperatorError",
    "PowerIterationError",
    "build_G",
    "solve_lower",
    "inverse_norms",
    "select_M",
]

POWER_ITER_TOL = 1e-10
POWER_ITER_CAP = 10_000
POWER_ITER_SEED = 0


class SingularOperatorError(ValueError):
    """Raised when the operator has a zero diagonal (g_0 = 0)."""


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_estimate: float):
        super().__init__(message)
        self.last_estimate = last_estimate


@dataclass(frozen=True)
class LowerToeplitz:
    """Lower-triangular Toeplitz operator defined by its first column.

    Entry (i, j) equals col[i-j] for j <= i and 0 otherwise; the operator is
    invertible iff col[0] != 0.
    """

    col: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "col", np.asarray(self.col, dtype=float))
        if self.col.ndim != 1 or self.col.size < 1:
            raise ValueError("col must be a nonempty 1-D vector")

    @property
    def m(self) -> int:
        return self.col.size

    def dense(self) -> np.ndarray:
        """Materialize the m x m matrix (small m only; used by oracles)."""
        out = np.zeros((self.m, self.m))
        for d in range(self.m):
            idx = np.arange(self.m - d)
            out[idx + d, idx] = self.col[d]
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply the operator; x may be (m,) or (m, k)."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.m:
            raise ValueError("dimension mismatch")
        out = np.empty_like(x)
        for i in range(self.m):
            out[i] = np.tensordot(self.col[: i + 1][::-1], x[: i + 1], axes=(0, 0))
        return out


def build_G(g_coeffs: LagCoeffs, m: int) -> LowerToeplitz:
    """Convolution operator of dimension m from kernel Laguerre coefficients.

    First column: col[0] = g_0 and col[i] = g_i - g_{i-1} for i >= 1.
    A vanishing g_0 makes the operator singular; it is flagged here with a
    warning and rejected at solve time.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    if g_coeffs.m < m:
        raise ValueError(f"need at least {m} kernel coefficients, got {g_coeffs.m}")
    g = g_coeffs.values[:m]
    if g[0] == 0.0:
        warnings.warn("g_0 = 0: operator is singular and cannot be solved")
    col = np.empty(m)
    col[0] = g[0]
    col[1:] = np.diff(g)
    return LowerToeplitz(col)


def solve_lower(G: LowerToeplitz, rhs) -> np.ndarray:
    """Forward substitution for G x = rhs; rhs may be (m,) or (m, ...)."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != G.m:
        raise ValueError(f"rhs has leading dimension {rhs.shape[0]}, expected {G.m}")
    if G.col[0] == 0.0:
        raise SingularOperatorError("singular operator: zero diagonal (g_0 = 0)")
    col = G.col
    x = np.empty_like(rhs)
    for i in range(G.m):
        acc = rhs[i] - np.tensordot(col[1 : i + 1][::-1], x[:i], axes=(0, 0))
        x[i] = acc / col[0]
    return x


def _solve_upper_transpose(col: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Back substitution for G^T x = rhs with G lower Toeplitz (column col).

    Row i of G^T pairs col[j-i] with x[j] for j >= i.
    """
    m = col.size
    x = np.empty_like(rhs)
    for i in range(m - 1, -1, -1):
        acc = rhs[i] - np.tensordot(col[1 : m - i], x[i + 1 :], axes=(0, 0))
        x[i] = acc / col[0]
    return x


_POWER_BLOCK = 4


def _spectral_norm_inverse(col: np.ndarray, tol: float, cap: int, rng) -> float:
    """||G^-1|| by block power iteration on G^-T G^-1 through solves.

    A small orthonormal block (subspace iteration with Rayleigh-Ritz)
    instead of a single vector: near-degenerate leading singular values then
    fall inside the block and cannot stall the convergence of the leading
    Ritz value.  The inverse is never formed.
    """
    m = col.size
    G = LowerToeplitz(col)
    b = min(_POWER_BLOCK, m)
    v, _ = np.linalg.qr(rng.standard_normal((m, b)))
    est_prev = np.inf
    for _ in range(cap):
        y = solve_lower(G, v)
        z = _solve_upper_transpose(col, y)  # z = G^-T G^-1 v
        ritz = np.linalg.eigvalsh(v.T @ z)
        est = float(ritz[-1])
        v, _ = np.linalg.qr(z)
        if abs(est - est_prev) <= tol * abs(est):
            return float(np.sqrt(est))
        est_prev = est
    raise PowerIterationError(
        f"power iteration did not converge within {cap} iterations",
        last_estimate=float(np.sqrt(max(est, 0.0))),
    )


@dataclass(frozen=True)
class InverseNormTable:
    """Norms of (G^(m))^-1 for m = 1..max_m.

    spectral[m-1] is the operator 2-norm and frobenius[m-1] the Frobenius
    norm.  Both sequences are nondecreasing in m (the inverse of a leading
    principal submatrix embeds into the next), and spectral <= frobenius.
    """

    spectral: np.ndarray
    frobenius: np.ndarray

    @property
    def max_m(self) -> int:
        return self.spectral.size

    def spectral_at(self, m: int) -> float:
        return float(self.spectral[m - 1])

    def frobenius_at(self, m: int) -> float:
        return float(self.frobenius[m - 1])


def inverse_norms(
    g_coeffs: LagCoeffs,
    max_m: int,
    tol: float = POWER_ITER_TOL,
    cap: int = POWER_ITER_CAP,
    seed: int = POWER_ITER_SEED,
) -> InverseNormTable:
    """Tabulate ||(G^(m))^-1|| and ||(G^(m))^-1||_F for m = 1..max_m.

    The inverse of a lower-triangular Toeplitz matrix is again lower
    triangular Toeplitz, so one triangular solve against e_0 yields its first
    column c, and the Frobenius norms accumulate incrementally:
    ||(G^(m))^-1||_F^2 = ||(G^(m-1))^-1||_F^2 + ||c[:m]||^2, where c[:m]
    reversed is the last inverse row upsilon^(m).  Spectral norms come from
    power iteration through triangular solves; the inverse is never formed.
    """
    if max_m < 1:
        raise ValueError("max_m must be a positive integer")
    G_full = build_G(g_coeffs, max_m)
    if G_full.col[0] == 0.0:
        raise SingularOperatorError("singular operator: g_0 = 0")
    e0 = np.zeros(max_m)
    e0[0] = 1.0
    inv_col = solve_lower(G_full, e0)
    frob = np.sqrt(np.cumsum(np.cumsum(inv_col**2)))
    rng = np.random.default_rng(seed)
    spectral = np.empty(max_m)
    spectral[0] = 1.0 / abs(G_full.col[0])
    for m in range(2, max_m + 1):
        spectral[m - 1] = _spectral_norm_inverse(G_full.col[:m], tol, cap, rng)
    return InverseNormTable(spectral=spectral, frobenius=frob)


def select_M(norms: InverseNormTable, eps: float, cap: int | None = None) -> int:
    """Largest m with ||(G^(m))^-1|| <= eps^-2, clamped to [1, max_m] and cap.

    The truncation rule behind the estimator's Laguerre order; simulations
    may override it with a fixed order.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    bound = eps**-2
    ok = np.nonzero(norms.spectral <= bound)[0]
    m = int(ok[-1]) + 1 if ok.size else 1
    if cap is not None:
        m = min(m, max(1, cap))
    return m
