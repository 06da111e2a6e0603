"""Small dense linear-algebra kernels shared by the oracle and ROM builders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

__all__ = [
    "NumericalError",
    "SpectrumOverlapError",
    "SylvesterResult",
    "solve_sylvester",
    "numerical_rank",
    "min_spectral_gap",
]


class NumericalError(RuntimeError):
    """A numerical kernel failed or produced an uncertified result."""


class SpectrumOverlapError(NumericalError):
    """Two matrices that must have disjoint spectra share an eigenvalue."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


@dataclass(frozen=True)
class SylvesterResult:
    X: np.ndarray
    residual: float
    method: str

    @property
    def relative_residual(self):
        nx = np.linalg.norm(self.X)
        return self.residual / nx if nx > 0 else self.residual


def min_spectral_gap(A, B):
    """Smallest distance between an eigenvalue of `A` and one of `B`."""
    ea = np.linalg.eigvals(np.atleast_2d(A))
    eb = np.linalg.eigvals(np.atleast_2d(B))
    return float(np.min(np.abs(ea[:, None] - eb[None, :])))


def numerical_rank(M, tol=None):
    """Rank from singular values, default tolerance ``max(shape) * eps * s_max``."""
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    if tol is None:
        tol = max(M.shape) * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))


def _kron_solve(A, B, C):
    n, k = C.shape
    # vec(AX - XB) = (I_k (x) A - B^T (x) I_n) vec(X), column-major vec
    K = np.kron(np.eye(k), A) - np.kron(B.T, np.eye(n))
    x = spla.solve(K, C.reshape(-1, order="F"))
    return x.reshape((n, k), order="F")


def solve_sylvester(A, B, C, *, method="auto", kron_max=3600, rtol=1e-10,
                    gap_tol=None):
    """Solve ``A X - X B = C`` with a residual certificate.

    Parameters
    ----------
    A, B, C
        Dense matrices of shapes ``(n, n)``, ``(k, k)``, ``(n, k)``.
    method
        ``"kron"`` vectorises and solves the ``nk x nk`` system directly,
        ``"schur"`` uses Bartels-Stewart, ``"auto"`` picks Kronecker while
        ``n * k <= kron_max``.
    rtol
        Certification threshold: the result is rejected unless
        ``||AX - XB - C|| <= rtol * (||A|| + ||B||) * ||X||``.
    gap_tol
        If given, the spectra of `A` and `B` must be at least this far
        apart; otherwise a :class:`SpectrumOverlapError` is raised.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n, k = A.shape[0], B.shape[0]
    if A.shape != (n, n) or B.shape != (k, k) or C.shape != (n, k):
        raise ValueError(
            f"incompatible shapes A{A.shape}, B{B.shape}, C{C.shape}")
    if gap_tol is not None:
        gap = min_spectral_gap(A, B)
        if gap <= gap_tol:
            raise SpectrumOverlapError(
                f"spectra overlap (gap {gap:.3e} <= {gap_tol:.3e}); "
                "Sylvester solution is not unique", gap=gap)
    if method == "auto":
        method = "kron" if n * k <= kron_max else "schur"
    try:
        if method == "kron":
            X = _kron_solve(A, B, C)
        elif method == "schur":
            X = spla.solve_sylvester(A, -B, C)
        else:
            raise ValueError(f"unknown method {method!r}")
    except (np.linalg.LinAlgError, spla.LinAlgError) as exc:
        raise NumericalError(f"Sylvester solve ({method}) failed: {exc}") from exc
    if not np.all(np.isfinite(X)):
        raise NumericalError(f"Sylvester solve ({method}) returned non-finite values")
    residual = float(np.linalg.norm(A @ X - X @ B - C))
    scale = (np.linalg.norm(A) + np.linalg.norm(B)) * np.linalg.norm(X)
    if residual > rtol * scale:
        raise NumericalError(
            f"Sylvester residual {residual:.3e} exceeds certificate "
            f"{rtol:.1e} * {scale:.3e}")
    return SylvesterResult(X=X, residual=residual, method=method)
