"""Model-based ground truth: full Sylvester solutions, moments, verification.

Everything here needs ``(A, B, C)`` and is used only to certify the
data-driven path or to produce comparison data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import solve_sylvester
from .lti import StateSpace, transfer_eval

__all__ = [
    "SylvesterSolution",
    "MomentSet",
    "VerificationReport",
    "BodeData",
    "solve_pi",
    "solve_upsilon",
    "solve_both",
    "tangential_moments",
    "verify_rom",
    "bode_data",
    "normalised_error",
]

KRON_MAX = 3600  # n * nu above which the Schur solver is used


@dataclass(frozen=True, eq=False)
class SylvesterSolution:
    pi: np.ndarray
    upsilon: np.ndarray
    pi_residual: float
    upsilon_residual: float


def _gap(sys, M):
    return 1e-9 * max(1.0, np.linalg.norm(sys.A, 2), np.linalg.norm(M, 2))


def solve_pi(sys, gen, *, method="auto", return_residual=False):
    """``Pi`` with ``A Pi + B L = Pi S``."""
    res = solve_sylvester(sys.A, gen.S, -sys.B @ gen.L, method=method,
                          kron_max=KRON_MAX, rtol=1e-8, gap_tol=_gap(sys, gen.S))
    return (res.X, res.residual) if return_residual else res.X


def solve_upsilon(sys, filt, *, method="auto", return_residual=False):
    """``Ups`` with ``Ups A + R C = Q Ups``, i.e. ``Q Ups - Ups A = R C``."""
    res = solve_sylvester(filt.Q, sys.A, filt.R @ sys.C, method=method,
                          kron_max=KRON_MAX, rtol=1e-8, gap_tol=_gap(sys, filt.Q))
    return (res.X, res.residual) if return_residual else res.X


def solve_both(sys, gen, filt, *, method="auto"):
    pi, rp = solve_pi(sys, gen, method=method, return_residual=True)
    ups, ru = solve_upsilon(sys, filt, method=method, return_residual=True)
    return SylvesterSolution(pi=pi, upsilon=ups, pi_residual=rp, upsilon_residual=ru)


@dataclass
class MomentSet:
    """0-moments: ``right`` holds ``(s, l, W(s) l)``, ``left`` holds ``(q, r, r W(q))``."""

    right: list = field(default_factory=list)
    left: list = field(default_factory=list)


def tangential_moments(sys, gen=None, filt=None):
    """Tangential 0-moments of `sys` at the points encoded by `gen` / `filt`."""
    ms = MomentSet()
    if gen is not None:
        lam, dirs = gen.point_directions()
        for i, s in enumerate(lam):
            l = dirs[:, i]
            ms.right.append((complex(s), l, transfer_eval(sys, s) @ l))
    if filt is not None:
        lam, dirs = filt.point_directions()
        for i, q in enumerate(lam):
            r = dirs[i]
            ms.left.append((complex(q), r, r @ transfer_eval(sys, q)))
    return ms


@dataclass
class VerificationReport:
    kind: str
    right_points: list
    right_errors: list
    left_points: list
    left_errors: list
    tol: float
    claims_right: bool
    claims_left: bool

    @property
    def right_pass(self):
        return all(e <= self.tol for e in self.right_errors)

    @property
    def left_pass(self):
        return all(e <= self.tol for e in self.left_errors)

    @property
    def passed(self):
        return ((self.right_pass or not self.claims_right)
                and (self.left_pass or not self.claims_left))

    @property
    def worst_right(self):
        return max(self.right_errors, default=0.0)

    @property
    def worst_left(self):
        return max(self.left_errors, default=0.0)

    def to_dict(self):
        def pts(ps):
            return [[p.real, p.imag] for p in ps]
        return {
            "kind": self.kind, "tol": self.tol, "passed": self.passed,
            "claims_right": self.claims_right, "claims_left": self.claims_left,
            "right": {"points": pts(self.right_points), "errors": self.right_errors,
                      "passed": self.right_pass},
            "left": {"points": pts(self.left_points), "errors": self.left_errors,
                     "passed": self.left_pass},
        }


def _rel(diff, ref):
    nref = np.linalg.norm(ref)
    return float(np.linalg.norm(diff) / nref) if nref > 0 else float(np.linalg.norm(diff))


def verify_rom(rom, sys, gen, filt, tol=1e-8):
    """Relative tangential interpolation errors of `rom` at every design point.

    Both sides are always evaluated; ``passed`` only requires the sides the
    model's kind claims.
    """
    rsys = rom.as_statespace()
    full = tangential_moments(sys, gen, filt)
    red = tangential_moments(rsys, gen, filt)
    right_err = [_rel(a[2] - b[2], a[2]) for a, b in zip(full.right, red.right)]
    left_err = [_rel(a[2] - b[2], a[2]) for a, b in zip(full.left, red.left)]
    return VerificationReport(
        kind=rom.kind,
        right_points=[m[0] for m in full.right], right_errors=right_err,
        left_points=[m[0] for m in full.left], left_errors=left_err,
        tol=float(tol), claims_right=rom.claims_right, claims_left=rom.claims_left)


@dataclass
class BodeData:
    """Frequency response on a grid; arrays are indexed ``[k, out, in]``."""

    freqs: np.ndarray
    response: np.ndarray

    @property
    def mag_db(self):
        with np.errstate(divide="ignore"):
            return 20 * np.log10(np.abs(self.response))

    @property
    def phase_deg(self):
        return np.degrees(np.unwrap(np.angle(self.response), axis=0))

    def tangential_right(self, l):
        """``|W(iw) l|`` in dB."""
        with np.errstate(divide="ignore"):
            return 20 * np.log10(np.linalg.norm(self.response @ np.asarray(l), axis=1))

    def tangential_left(self, r):
        """``|r W(iw)|`` in dB."""
        with np.errstate(divide="ignore"):
            return 20 * np.log10(np.linalg.norm(np.asarray(r) @ self.response, axis=1))

    def to_csv(self, path):
        _, p, m = self.response.shape
        header = ["freq_rad_s"]
        for i in range(p):
            for j in range(m):
                header += [f"mag_db_{i + 1}{j + 1}", f"phase_deg_{i + 1}{j + 1}"]
        mag, ph = self.mag_db, self.phase_deg
        cols = [self.freqs]
        for i in range(p):
            for j in range(m):
                cols += [mag[:, i, j], ph[:, i, j]]
        np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g",
                   header=",".join(header), comments="")


def bode_data(model, freqs):
    """Evaluate ``W(iw)`` on `freqs` (rad/s) for a StateSpace or ReducedModel."""
    sys = model if isinstance(model, StateSpace) else model.as_statespace()
    freqs = np.asarray(freqs, dtype=float).reshape(-1)
    resp = np.stack([transfer_eval(sys, 1j * w) for w in freqs])
    return BodeData(freqs=freqs, response=resp)


def normalised_error(x_est, x_true):
    """``||x_est - x_true||_2 / ||x_true||_2`` with induced 2-norms for matrices."""
    x_est = np.atleast_2d(np.asarray(x_est, dtype=float))
    x_true = np.atleast_2d(np.asarray(x_true, dtype=float))
    den = np.linalg.norm(x_true, 2)
    if den == 0:
        raise ValueError("reference quantity is zero; normalised error undefined")
    return float(np.linalg.norm(x_est - x_true, 2) / den)
