"""Signal generators and swapped filters from interpolation frequencies.

Each positive frequency w contributes the rotation block ``[[0, w], [-w, 0]]``
(eigenvalues +-iw); a zero frequency contributes a 1x1 zero block.  All
matrices stay real.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DesignError",
    "SignalGenerator",
    "SwappedFilter",
    "Design",
    "block_matrix",
    "interpolation_points",
    "build_generator",
    "build_filter",
    "exact_exp",
    "exact_exp_batch",
    "load_design",
    "design_from_dict",
]


class DesignError(ValueError):
    """Invalid interpolation design (duplicates, zero directions, rank loss)."""


def _check_freqs(freqs):
    freqs = tuple(float(w) for w in np.atleast_1d(np.asarray(freqs, dtype=float)))
    if not freqs:
        raise DesignError("at least one interpolation frequency is required")
    if any(not math.isfinite(w) or w < 0 for w in freqs):
        raise DesignError(f"frequencies must be finite and nonnegative: {freqs}")
    if len(set(freqs)) != len(freqs):
        raise DesignError(f"duplicate interpolation frequencies: {freqs}")
    return freqs


def _block_sizes(freqs):
    return [1 if w == 0 else 2 for w in freqs]


def block_matrix(freqs):
    """Real block-diagonal matrix with spectrum ``{+-iw}`` (and 0 for w = 0)."""
    freqs = _check_freqs(freqs)
    nu = sum(_block_sizes(freqs))
    M = np.zeros((nu, nu))
    i = 0
    for w in freqs:
        if w > 0:
            M[i, i + 1] = w
            M[i + 1, i] = -w
            i += 2
        else:
            i += 1
    return M


def _eigvecs(freqs):
    """Right eigenvectors (columns) and eigenvalues of :func:`block_matrix`."""
    nu = sum(_block_sizes(freqs))
    V = np.zeros((nu, nu), dtype=complex)
    lam = np.zeros(nu, dtype=complex)
    i = 0
    for w in freqs:
        if w > 0:
            # [[0, w], [-w, 0]] [1, i]^T = iw [1, i]^T
            V[i, i], V[i + 1, i] = 1.0, 1j
            V[i, i + 1], V[i + 1, i + 1] = 1.0, -1j
            lam[i], lam[i + 1] = 1j * w, -1j * w
            i += 2
        else:
            V[i, i] = 1.0
            i += 1
    return lam, V


def interpolation_points(freqs):
    """Complex interpolation points in block order: ``+iw, -iw`` per positive w."""
    return _eigvecs(_check_freqs(freqs))[0]


def _expand_directions(freqs, direction, directions, rows, what):
    nu = sum(_block_sizes(freqs))
    if directions is not None:
        D = np.asarray(directions, dtype=float)
        if D.shape != (rows, nu):
            raise DesignError(f"{what} directions must have shape {(rows, nu)}, got {D.shape}")
        return D
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.size != rows:
        raise DesignError(f"{what} direction must have {rows} entries, got {d.size}")
    if not np.any(d != 0):
        raise DesignError(f"{what} direction must be nonzero")
    return np.outer(d, np.ones(nu))


def _pbh_ok(lam, vecs, D, tol=1e-10):
    """PBH-style test for the block form: every eigenvector must see ``D``."""
    scale = max(np.linalg.norm(D), 1.0)
    return all(np.linalg.norm(D @ vecs[:, i]) > tol * scale for i in range(lam.size))


@dataclass(frozen=True, eq=False)
class SignalGenerator:
    """``w' = S w, u = L w`` with ``w(0) = omega0``."""

    freqs: tuple
    S: np.ndarray
    L: np.ndarray
    omega0: np.ndarray

    @property
    def nu(self):
        return self.S.shape[0]

    @property
    def points(self):
        return interpolation_points(self.freqs)

    def point_directions(self):
        """Complex tangential direction ``L v_i`` for each eigenvector ``v_i`` of S."""
        lam, V = _eigvecs(self.freqs)
        return lam, self.L @ V


@dataclass(frozen=True, eq=False)
class SwappedFilter:
    """``v' = Q v + R y`` filtering the plant output."""

    freqs: tuple
    Q: np.ndarray
    R: np.ndarray

    @property
    def nu(self):
        return self.Q.shape[0]

    @property
    def points(self):
        return interpolation_points(self.freqs)

    def point_directions(self):
        """Complex left direction ``w_i R`` for each left eigenvector ``w_i`` of Q."""
        lam, V = _eigvecs(self.freqs)
        W = np.linalg.inv(V)  # rows are left eigenvectors
        return lam, W @ self.R


def build_generator(freqs, direction=None, omega0=None, *, directions=None):
    """Build a signal generator with constant (or per-column) tangential directions.

    Parameters
    ----------
    freqs : sequence of float
        Distinct nonnegative frequencies in rad/s.
    direction : array_like
        Right tangential direction ``l`` (length m), repeated in every column
        of ``L``.
    omega0 : array_like, optional
        Initial generator state, all-ones by default.
    directions : array_like, optional
        Explicit ``m x nu`` matrix ``L`` overriding `direction`.
    """
    freqs = _check_freqs(freqs)
    S = block_matrix(freqs)
    nu = S.shape[0]
    if directions is None and direction is None:
        raise DesignError("a tangential direction is required")
    rows = (np.asarray(directions).shape[0] if directions is not None
            else np.asarray(direction).reshape(-1).size)
    L = _expand_directions(freqs, direction, directions, rows, "right")
    w0 = np.ones(nu) if omega0 is None else np.asarray(omega0, dtype=float).reshape(-1)
    if w0.size != nu:
        raise DesignError(f"omega0 must have {nu} entries, got {w0.size}")
    lam, V = _eigvecs(freqs)
    if not _pbh_ok(lam, V, L):
        raise DesignError("(S, L) is not observable for these directions")
    W = np.linalg.inv(V)
    if not _pbh_ok(lam, W.T, w0.reshape(1, -1)):
        raise DesignError("(S, omega0) is not excitable; choose another omega0")
    for M in (S, L, w0):
        M.setflags(write=False)
    return SignalGenerator(freqs=freqs, S=S, L=L, omega0=w0)


def build_filter(freqs, direction=None, *, directions=None):
    """Build a swapped filter; `direction` is the left row ``r`` (length p).

    ``R`` stacks ``r`` in every row unless an explicit ``nu x p`` matrix is
    passed as `directions`.
    """
    freqs = _check_freqs(freqs)
    Q = block_matrix(freqs)
    if directions is None and direction is None:
        raise DesignError("a tangential direction is required")
    if directions is not None:
        R = _expand_directions(freqs, None, np.asarray(directions, dtype=float).T,
                               np.asarray(directions).shape[1], "left").T
    else:
        r = np.asarray(direction, dtype=float).reshape(-1)
        R = _expand_directions(freqs, r, None, r.size, "left").T
    lam, V = _eigvecs(freqs)
    W = np.linalg.inv(V)
    if not _pbh_ok(lam, R.T @ W.T, np.eye(R.shape[1])):
        raise DesignError("(Q, R) is not reachable for these directions")
    Q.setflags(write=False)
    R.setflags(write=False)
    return SwappedFilter(freqs=freqs, Q=Q, R=R)


def _parse_blocks(M, atol=0.0):
    M = np.asarray(M, dtype=float)
    nu = M.shape[0]
    if M.shape != (nu, nu):
        raise DesignError("matrix is not square")
    blocks, i = [], 0
    mask = np.zeros_like(M, dtype=bool)
    while i < nu:
        if i + 1 < nu and M[i, i + 1] != 0:
            w = M[i, i + 1]
            if (w <= 0 or M[i + 1, i] != -w or abs(M[i, i]) > atol
                    or abs(M[i + 1, i + 1]) > atol):
                raise DesignError(f"entry block at {i} is not a rotation block")
            blocks.append((i, w))
            mask[i:i + 2, i:i + 2] = True
            i += 2
        else:
            if abs(M[i, i]) > atol:
                raise DesignError(f"diagonal entry {i} is not zero")
            blocks.append((i, 0.0))
            mask[i, i] = True
            i += 1
    if np.any(np.abs(M[~mask]) > atol):
        raise DesignError("matrix has entries outside the recognised diagonal blocks")
    return blocks


def exact_exp(M, t):
    """Closed-form ``expm(M t)`` for rotation / zero block-diagonal ``M``."""
    blocks = _parse_blocks(M)
    X = np.zeros(np.shape(M))
    for i, w in blocks:
        if w == 0:
            X[i, i] = 1.0
        else:
            c, s = math.cos(w * t), math.sin(w * t)
            X[i:i + 2, i:i + 2] = [[c, s], [-s, c]]
    return X


def exact_exp_batch(M, times):
    """Vectorised :func:`exact_exp` over a sequence of times, shape ``(N, nu, nu)``."""
    blocks = _parse_blocks(M)
    t = np.asarray(times, dtype=float).reshape(-1)
    X = np.zeros((t.size,) + np.shape(M))
    for i, w in blocks:
        if w == 0:
            X[:, i, i] = 1.0
        else:
            c, s = np.cos(w * t), np.sin(w * t)
            X[:, i, i] = c
            X[:, i, i + 1] = s
            X[:, i + 1, i] = -s
            X[:, i + 1, i + 1] = c
    return X


@dataclass(frozen=True, eq=False)
class Design:
    generator: SignalGenerator
    filter: SwappedFilter
    source: dict = field(default_factory=dict)

    @property
    def nu(self):
        return self.generator.nu

    def check_disjoint(self, tol=1e-9):
        """Raise if ``sigma(S)`` and ``sigma(Q)`` share a point."""
        ps = self.generator.points
        pq = self.filter.points
        gap = np.min(np.abs(ps[:, None] - pq[None, :]))
        if gap <= tol:
            raise DesignError("right and left interpolation points must differ")
        return float(gap)


def _side_freqs(side, unit):
    keys = [k for k in ("freqs_rad_s", "freqs_hz", "freqs") if k in side]
    if len(keys) != 1:
        raise DesignError("each design side needs exactly one of "
                          "'freqs_rad_s', 'freqs_hz', 'freqs'")
    key = keys[0]
    if key == "freqs":
        if unit not in ("rad_s", "hz"):
            raise DesignError(f"unknown frequency unit {unit!r}")
        key = "freqs_hz" if unit == "hz" else "freqs_rad_s"
        vals = side["freqs"]
    else:
        vals = side[key]
    scale = 2 * math.pi if key == "freqs_hz" else 1.0
    return [scale * float(w) for w in vals]


def design_from_dict(d, *, unit="rad_s", check=True):
    """Build a :class:`Design` from the JSON design-file schema.

    ``freqs_rad_s`` and ``freqs_hz`` are explicit; a bare ``freqs`` list is
    read in `unit` (``"rad_s"`` or ``"hz"``).
    """
    try:
        right, left = d["right"], d["left"]
    except KeyError as exc:
        raise DesignError(f"design is missing section {exc}") from None
    gen = build_generator(_side_freqs(right, unit), right.get("direction"),
                          d.get("omega0"), directions=right.get("directions"))
    filt = build_filter(_side_freqs(left, unit), left.get("direction"),
                        directions=left.get("directions"))
    if gen.nu != filt.nu:
        raise DesignError(
            f"right and left sides must have equal order, got {gen.nu} and {filt.nu}")
    design = Design(gen, filt, source=dict(d))
    if check:
        design.check_disjoint()
    return design


def load_design(path, unit="rad_s"):
    with open(Path(path)) as fh:
        return design_from_dict(json.load(fh), unit=unit)
