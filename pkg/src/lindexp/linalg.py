"""Dense complex linear-algebra kernels shared by the integrators.

All kernels work on complex128 arrays. "Trace norm" means the sum of
singular values (Schatten-1); "energy" means squared Frobenius mass.
Factors are m x r matrices T standing for the positive matrix T T^+.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Hermiticity acceptance for diagnostics: roundoff accumulates over thousands
# of steps, so exact symmetry is never required.
HERMITICITY_RTOL = 1e-10


def _as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def trace_norm(a) -> float:
    """Sum of singular values of a square matrix.

    Equals trace(a) for Hermitian positive semidefinite a.
    """
    a = _as_square(a)
    if a.shape[0] == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False).sum())


def frobenius_norm(a) -> float:
    """Square root of the total squared modulus of the entries."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128)))


def hermiticity_defect(a) -> float:
    """Frobenius distance from a to its conjugate transpose."""
    a = _as_square(a)
    return float(np.linalg.norm(a - a.conj().T))


def is_hermitian(a, rtol: float = HERMITICITY_RTOL) -> bool:
    a = _as_square(a)
    return hermiticity_defect(a) <= rtol * max(1.0, float(np.linalg.norm(a)))


def hermitian_spectrum(a, rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted descending.

    Rejects input whose anti-Hermitian part exceeds rtol * max(1, ||a||_F);
    positivity diagnostics must never silently symmetrize a broken state.
    """
    a = _as_square(a)
    defect = hermiticity_defect(a)
    if defect > rtol * max(1.0, float(np.linalg.norm(a))):
        raise ValueError(f"matrix is not Hermitian: defect {defect:.3e}")
    return np.linalg.eigvalsh(a)[::-1]


def _fix_column_signs(u: np.ndarray) -> np.ndarray:
    """Rotate each column so its first nonzero entry is real nonnegative."""
    u = u.copy()
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.flatnonzero(np.abs(col) > 0.0)
        if nz.size == 0:
            continue
        pivot = col[nz[0]]
        u[:, j] = col * (abs(pivot) / pivot)
    return u


@dataclass(frozen=True)
class SvdTruncation:
    """Result of column compression: factor (m x r), discarded energy, rank."""

    factor: np.ndarray
    discarded_energy: float
    rank: int


def truncate_svd(x, tolerance: float) -> SvdTruncation:
    """Best low-rank factor of x with squared-singular-value tail <= tolerance.

    Keeps the minimal rank r such that sum_{j>r} sigma_j(x)^2 <= tolerance and
    returns T = U_r diag(sigma_1..sigma_r). By unitary invariance,
    ||x x^+ - T T^+||_1 equals the discarded tail sum exactly. A boundary tie
    (tail == tolerance) keeps the smaller rank. With tolerance 0, only exact
    zero singular values are dropped. Left singular vectors carry a
    deterministic sign: first nonzero entry real nonnegative.

    Wide inputs with a positive tolerance go through the spectrum of the
    Gram matrix x x^+ instead of a direct SVD: the factor only needs the
    left vectors, and the eigenproblem never touches the column dimension.
    Squaring costs accuracy below sqrt(machine), which a positive budget
    tolerates and the exact path must not.
    """
    x = _as_matrix(x)
    if tolerance < 0:
        raise ValueError(f"tolerance must be nonnegative, got {tolerance}")
    if x.shape[1] == 0:
        return SvdTruncation(factor=x.copy(), discarded_energy=0.0, rank=0)
    if tolerance > 0.0 and x.shape[1] >= x.shape[0]:
        lam, vec = np.linalg.eigh(x @ x.conj().T)
        energy = np.clip(lam[::-1], 0.0, None)
        u, s = vec[:, ::-1], np.sqrt(energy)
    else:
        u, s, _ = np.linalg.svd(x, full_matrices=False)
        energy = s * s
    # tails[r] = sum of energies dropped when keeping the leading r columns
    tails = np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]])
    rank = int(np.argmax(tails <= tolerance))
    u = _fix_column_signs(u[:, :rank])
    return SvdTruncation(
        factor=u * s[:rank],
        discarded_energy=float(tails[rank]),
        rank=rank,
    )


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring Pade approximation."""
    a = _as_square(a)
    return scipy.linalg.expm(a)


def _spectral_norm_bound(a: np.ndarray) -> float:
    """Cheap upper bound for the spectral norm of a."""
    norm1 = float(np.abs(a).sum(axis=0).max())
    norminf = float(np.abs(a).sum(axis=1).max())
    return min(float(np.linalg.norm(a)), math.sqrt(norm1 * norminf))


def expm_action(a, v, tolerance: float, dense_threshold: int = 64) -> np.ndarray:
    """Apply exp(a) to the columns of v, accurate to tolerance * ||v||_F.

    Truncated Taylor series with scaling substeps: a is split into s pieces of
    spectral norm <= 1 and terms are summed until a rigorous remainder bound
    falls below the per-substep error budget (remainder after the k-th term is
    at most ||term_k|| * (e^theta - 1) for theta >= ||a/s||_2). The budget
    accounts for worst-case growth through the remaining substeps, so the
    final factor-level error is below tolerance * ||v||_F. Small problems
    (dimension <= dense_threshold) and roundoff-level tolerances fall back to
    the dense exponential.
    """
    a = _as_square(a)
    v = np.asarray(v, dtype=np.complex128)
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    if v.ndim != 2 or v.shape[0] != a.shape[0]:
        raise ValueError(
            f"operand shapes do not conform: {a.shape} applied to {v.shape}"
        )
    if not (np.isfinite(a).all() and np.isfinite(v).all()):
        raise ValueError("nonfinite entries in expm_action input")
    if tolerance < 0 or tolerance >= 1:
        raise ValueError(f"tolerance must lie in [0, 1), got {tolerance}")

    def _finish(w):
        return w[:, 0] if squeeze else w

    if v.shape[1] == 0:
        return _finish(v.copy())
    v_norm = float(np.linalg.norm(v))
    if v_norm == 0.0:
        return _finish(v.copy())
    if a.shape[0] <= dense_threshold or tolerance < 1e-15:
        return _finish(expm(a) @ v)

    theta_full = _spectral_norm_bound(a)
    if theta_full == 0.0:
        return _finish(v.copy())
    substeps = max(1, math.ceil(theta_full))
    if substeps > 10**6:
        raise ValueError(f"matrix norm {theta_full:.3e} too large to scale")
    b = a / substeps
    theta = theta_full / substeps
    # Errors committed early propagate through the remaining exponentials;
    # bound the per-application growth by the Gershgorin estimate of the
    # largest eigenvalue of the Hermitian part (<= 0 for dissipative drifts).
    herm = 0.5 * (b + b.conj().T)
    off = np.abs(herm).sum(axis=1) - np.abs(np.diag(herm))
    mu = max(0.0, float((np.diag(herm).real + off).max()))
    budget = tolerance * v_norm / (substeps * math.exp(mu * (substeps - 1)))
    remainder_factor = math.expm1(theta)

    w = v
    for _ in range(substeps):
        term = w
        acc = w.copy()
        for k in range(1, 400):
            term = b @ term / k
            acc += term
            if float(np.linalg.norm(term)) * remainder_factor <= budget:
                break
        else:
            raise ArithmeticError("Taylor series failed to meet tolerance")
        w = acc
    return _finish(w)


def hconcat(blocks) -> np.ndarray:
    """Concatenate matrices side by side, preserving block order."""
    mats = [_as_matrix(b, f"block {i}") for i, b in enumerate(blocks)]
    if not mats:
        raise ValueError("hconcat needs at least one block")
    rows = mats[0].shape[0]
    for i, b in enumerate(mats):
        if b.shape[0] != rows:
            raise ValueError(
                f"block {i} has {b.shape[0]} rows, expected {rows}"
            )
    return np.hstack(mats)
