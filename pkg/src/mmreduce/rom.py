"""Reduced-order model assembly from interpolation data.

Two-sided models use ``G = (Ups Pi)^{-1} Ups B``; one-sided models keep a free
gain, chosen by pole placement when not supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .linalg import NumericalError, SpectrumOverlapError, min_spectral_gap, solve_sylvester
from .lti import DimensionError, StateSpace

__all__ = [
    "ReducedModel",
    "IllConditionedError",
    "solve_ups_pi",
    "build_two_sided",
    "build_one_sided_right",
    "build_one_sided_left",
    "default_poles",
]

KINDS = ("two_sided", "right_only", "left_only")


class IllConditionedError(NumericalError):
    """Ups*Pi is too close to singular to invert."""


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """``xi' = F xi + G u, psi = H xi`` with the interpolation data it claims."""

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    kind: str
    S: np.ndarray | None = None
    L: np.ndarray | None = None
    Q: np.ndarray | None = None
    R: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        # reuse StateSpace validation for shapes
        StateSpace(self.F, self.G, self.H)

    @property
    def order(self):
        return self.F.shape[0]

    @property
    def claims_right(self):
        return self.kind in ("two_sided", "right_only")

    @property
    def claims_left(self):
        return self.kind in ("two_sided", "left_only")

    def as_statespace(self):
        return StateSpace(self.F, self.G, self.H)


def _gap_tol(*Ms):
    return 1e-9 * max(1.0, *(np.linalg.norm(M, 2) for M in Ms))


def solve_ups_pi(S, L, Q, R, c_pi, ups_b, *, kron_max_nu=60):
    """Solve ``Q X - X S = R c_pi - ups_b L`` for ``X = Ups Pi``.

    Kronecker vectorisation is used for ``nu <= kron_max_nu`` and
    Bartels-Stewart above.  The residual is certified at
    ``1e-10 (||Q|| + ||S||) ||X||``.
    """
    S, L, Q, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (S, L, Q, R))
    c_pi = np.atleast_2d(np.asarray(c_pi, dtype=float))
    ups_b = np.atleast_2d(np.asarray(ups_b, dtype=float))
    nu, nq = S.shape[0], Q.shape[0]
    if c_pi.shape != (R.shape[1], nu) or ups_b.shape != (nq, L.shape[0]):
        raise DimensionError(
            f"c_pi {c_pi.shape} / ups_b {ups_b.shape} do not fit S {S.shape}, "
            f"L {L.shape}, Q {Q.shape}, R {R.shape}")
    rhs = R @ c_pi - ups_b @ L
    method = "kron" if max(nu, nq) <= kron_max_nu else "schur"
    res = solve_sylvester(Q, S, rhs, method=method, kron_max=np.inf,
                          gap_tol=_gap_tol(Q, S))
    return res.X


def build_two_sided(S, L, c_pi, ups_b, ups_pi, *, Q=None, R=None, cond_max=1e12):
    """Two-sided model ``F = S - G L, G = ups_pi^{-1} ups_b, H = c_pi``."""
    S, L = np.atleast_2d(S).astype(float), np.atleast_2d(L).astype(float)
    ups_pi = np.atleast_2d(np.asarray(ups_pi, dtype=float))
    cond = float(np.linalg.cond(ups_pi))
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditionedError(
            f"Ups*Pi has condition number {cond:.3e} > {cond_max:.1e}; "
            "choose other interpolation points or directions")
    G = np.linalg.solve(ups_pi, np.atleast_2d(ups_b))
    F = S - G @ L
    gap = min_spectral_gap(S, F)
    if gap <= _gap_tol(S, F):
        raise SpectrumOverlapError(
            f"sigma(S) and sigma(S - GL) overlap (gap {gap:.3e})", gap=gap)
    eig = np.linalg.eigvals(F)
    diagnostics = {"cond_ups_pi": cond, "spectral_gap": gap,
                   "stable": bool(np.max(eig.real) < 0)}
    return ReducedModel(F=F, G=G, H=np.atleast_2d(np.asarray(c_pi, dtype=float)),
                        kind="two_sided", S=S, L=L, Q=Q, R=R,
                        diagnostics=diagnostics)


def default_poles(nu, scale=10.0):
    """Stable placement targets ``-scale * (1 + idx)``."""
    return -scale * (1.0 + np.arange(nu))


def _place_output_injection(S, L, poles):
    """Return ``G`` with ``sigma(S - G L) = poles`` via the dual placement problem.

    ``L`` may be rank deficient (constant tangential directions give rank 1),
    so the placement runs on the range of ``L^T``.
    """
    U, s, Vt = np.linalg.svd(L.T, full_matrices=False)
    r = int(np.sum(s > max(L.shape) * np.finfo(float).eps * s[0]))
    Bt = U[:, :r] * s[:r]
    K = scipy.signal.place_poles(S.T, Bt, poles).gain_matrix
    # S^T - L^T G^T = S^T - Bt Vt_r G^T ; choose G^T = Vt_r^T K
    return (Vt[:r].T @ K).T


def build_one_sided_right(S, L, c_pi, G=None, *, poles=None):
    """Right-only family ``F = S - G L, H = c_pi`` with free ``G``.

    Without `G`, ``G`` places ``sigma(S - G L)`` at `poles`
    (default :func:`default_poles`).
    """
    S, L = np.atleast_2d(S).astype(float), np.atleast_2d(L).astype(float)
    nu = S.shape[0]
    placed = G is None
    if placed:
        G = _place_output_injection(S, L, default_poles(nu) if poles is None else poles)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    F = S - G @ L
    gap = min_spectral_gap(S, F)
    if gap <= _gap_tol(S, F):
        raise SpectrumOverlapError(
            f"sigma(S) and sigma(S - GL) overlap (gap {gap:.3e}); G is not admissible",
            gap=gap)
    diagnostics = {"spectral_gap": gap, "placed": placed,
                   "stable": bool(np.max(np.linalg.eigvals(F).real) < 0)}
    return ReducedModel(F=F, G=G, H=np.atleast_2d(np.asarray(c_pi, dtype=float)),
                        kind="right_only", S=S, L=L, diagnostics=diagnostics)


def build_one_sided_left(Q, R, ups_b, H=None, *, poles=None):
    """Left-only family ``F = Q - R H, G = ups_b`` with free ``H``."""
    Q, R = np.atleast_2d(Q).astype(float), np.atleast_2d(R).astype(float)
    nu = Q.shape[0]
    placed = H is None
    if placed:
        # sigma(Q - R H) = sigma(Q^T - H^T R^T): the right problem on the transposes
        H = _place_output_injection(Q.T, R.T, default_poles(nu) if poles is None else poles).T
    H = np.atleast_2d(np.asarray(H, dtype=float))
    F = Q - R @ H
    gap = min_spectral_gap(Q, F)
    if gap <= _gap_tol(Q, F):
        raise SpectrumOverlapError(
            f"sigma(Q) and sigma(Q - RH) overlap (gap {gap:.3e}); H is not admissible",
            gap=gap)
    diagnostics = {"spectral_gap": gap, "placed": placed,
                   "stable": bool(np.max(np.linalg.eigvals(F).real) < 0)}
    return ReducedModel(F=F, G=np.atleast_2d(np.asarray(ups_b, dtype=float)), H=H,
                        kind="left_only", Q=Q, R=R, diagnostics=diagnostics)
