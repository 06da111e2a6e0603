"""Continuous-time LTI systems: representation, exact simulation, frequency response.

Simulation advances the augmented autonomous system with a single matrix
exponential per run, so sampled data carry no integrator truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as spla

from .linalg import NumericalError

__all__ = [
    "DimensionError",
    "SingularPointError",
    "UnstableSystemError",
    "StateSpace",
    "Trajectory",
    "uniform_grid",
    "grid_step",
    "propagator",
    "simulate_autonomous_augmented",
    "simulate_filtered_impulse",
    "simulate_two_sided",
    "simulate_input",
    "transfer_eval",
    "spectrum",
]


class DimensionError(ValueError):
    """Matrix or signal dimensions do not fit together."""


class UnstableSystemError(ValueError):
    """An operation requiring sigma(A) in the open left half-plane got an unstable A."""


class SingularPointError(ValueError):
    """Evaluation point lies (numerically) on an eigenvalue of A."""

    def __init__(self, message, eigenvalue):
        super().__init__(message)
        self.eigenvalue = eigenvalue


def _as_matrix(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got ndim={M.ndim}")
    return M


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Strictly proper state-space model ``x' = Ax + Bu, y = Cx``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        C = _as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {C.shape}")
        for name, M in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} contains non-finite entries")
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @cached_property
    def poles(self):
        return spectrum(self.A)

    def is_stable(self):
        return bool(np.max(self.poles.real) < 0)

    def check_stable(self):
        if not self.is_stable():
            worst = self.poles[np.argmax(self.poles.real)]
            raise UnstableSystemError(
                f"system is not asymptotically stable: eigenvalue {worst:.6g}")
        return self

    def decay_rate(self):
        """``max Re sigma(A)``; negative for stable systems."""
        return float(np.max(self.poles.real))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled multichannel signal; ``samples`` is ``(len(times), channel_count)``."""

    times: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        x = np.asarray(self.samples, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] != t.shape[0]:
            raise DimensionError(
                f"{t.shape[0]} instants but samples have shape {x.shape}")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", x)

    @property
    def channel_count(self):
        return self.samples.shape[1]

    def __len__(self):
        return self.times.shape[0]

    def channel(self, j):
        return self.samples[:, j]

    def select(self, channels):
        return Trajectory(self.times, self.samples[:, list(channels)])


def uniform_grid(dt, duration):
    """Uniform grid ``0, dt, ..., <= duration``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    N = int(np.floor(duration / dt + 1e-9)) + 1
    return dt * np.arange(N)


def grid_step(times, rtol=1e-9):
    """Return the step of a uniform grid or raise ``ValueError``."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("time grid needs at least two instants")
    steps = np.diff(times)
    dt = (times[-1] - times[0]) / (times.size - 1)
    if dt <= 0 or np.max(np.abs(steps - dt)) > rtol * max(dt, abs(times[-1])):
        raise ValueError("time grid is not uniform")
    return float(dt)


def propagator(M, dt):
    """``expm(M dt)`` via scaling-and-squaring Pade; failures raise."""
    try:
        E = spla.expm(np.asarray(M, dtype=float) * dt)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"matrix exponential failed: {exc}") from exc
    if not np.all(np.isfinite(E)):
        raise NumericalError("matrix exponential produced non-finite entries")
    return E


def _rk4_propagator(M, dt, substeps):
    # one RK4 step of z' = Mz is the degree-4 Taylor polynomial of expm(Mh)
    h = dt / substeps
    I = np.eye(M.shape[0])
    Mh = M * h
    P = I + Mh @ (I + Mh @ (I + Mh @ (I + Mh / 4) / 3) / 2)
    return np.linalg.matrix_power(P, substeps)


def _step(M, z0, times, method="exact", substeps=1):
    dt = grid_step(times)
    if method == "exact":
        E = propagator(M, dt)
    elif method == "rk4":
        E = _rk4_propagator(np.asarray(M, dtype=float), dt, substeps)
    else:
        raise ValueError(f"unknown integration method {method!r}")
    Z = np.empty((times.size, z0.size))
    z = np.array(z0, dtype=float)
    for k in range(times.size):
        Z[k] = z
        z = E @ z
    return Z


def _augmented_direct(sys, S, L):
    n, nu = sys.n, S.shape[0]
    M = np.zeros((n + nu, n + nu))
    M[:n, :n] = sys.A
    M[:n, n:] = sys.B @ L
    M[n:, n:] = S
    return M


def simulate_autonomous_augmented(sys, gen, x0=None, times=None, *,
                                  method="exact", substeps=1,
                                  return_state=False):
    """Simulate the plant driven by the signal generator ``w' = Sw, u = Lw``.

    Parameters
    ----------
    sys : StateSpace
    gen : SignalGenerator
    x0 : array_like, optional
        Plant initial state, zero by default.
    times : array_like
        Uniform sample grid.
    method : {"exact", "rk4"}
        ``"exact"`` steps with the exponential of the augmented matrix;
        ``"rk4"`` uses fixed-step RK4 with `substeps` per sample interval.

    Returns
    -------
    (Trajectory, Trajectory) or (Trajectory, Trajectory, Trajectory)
        Output ``y``, generator state ``omega`` and, if `return_state`,
        the plant state ``x``.
    """
    S, L = np.asarray(gen.S), np.asarray(gen.L)
    if L.shape != (sys.m, S.shape[0]):
        raise DimensionError(
            f"L must be {sys.m}x{S.shape[0]} to drive this plant, got {L.shape}")
    times = np.asarray(times, dtype=float)
    x0 = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != sys.n:
        raise DimensionError(f"x0 must have {sys.n} entries")
    z0 = np.concatenate([x0, np.asarray(gen.omega0, dtype=float)])
    Z = _step(_augmented_direct(sys, S, L), z0, times, method, substeps)
    X, W = Z[:, :sys.n], Z[:, sys.n:]
    out = (Trajectory(times, X @ sys.C.T), Trajectory(times, W))
    if return_state:
        out += (Trajectory(times, X),)
    return out


def simulate_filtered_impulse(sys, filt, j, times, *, return_state=False):
    """Impulse experiment on input `j` (0-based) filtered by ``v' = Qv + Ry``.

    The Dirac input is realised as the jump ``x(0+) = B e_j`` with ``u = 0``
    afterwards and ``v(0) = 0``.  Returns the filter state trajectory, plus
    the plant state if `return_state` is set.
    """
    if not 0 <= j < sys.m:
        raise IndexError(f"input index {j} out of range for m={sys.m}")
    sys.check_stable()
    Q, R = np.asarray(filt.Q), np.asarray(filt.R)
    nu = Q.shape[0]
    if R.shape != (nu, sys.p):
        raise DimensionError(f"R must be {nu}x{sys.p}, got {R.shape}")
    n = sys.n
    M = np.zeros((n + nu, n + nu))
    M[:n, :n] = sys.A
    M[n:, :n] = R @ sys.C
    M[n:, n:] = Q
    z0 = np.zeros(n + nu)
    z0[:n] = sys.B[:, j]
    times = np.asarray(times, dtype=float)
    Z = _step(M, z0, times)
    varpi = Trajectory(times, Z[:, n:])
    if return_state:
        return varpi, Trajectory(times, Z[:, :n])
    return varpi


def simulate_two_sided(sys, gen, filt, times, x0=None, varpi0=None):
    """Generator -> plant -> filter cascade; returns ``(x, omega, varpi)`` trajectories."""
    S, L = np.asarray(gen.S), np.asarray(gen.L)
    Q, R = np.asarray(filt.Q), np.asarray(filt.R)
    n, nu, nq = sys.n, S.shape[0], Q.shape[0]
    if L.shape != (sys.m, nu) or R.shape != (nq, sys.p):
        raise DimensionError("generator/filter directions do not fit the plant")
    M = np.zeros((n + nu + nq, n + nu + nq))
    M[:n + nu, :n + nu] = _augmented_direct(sys, S, L)
    M[n + nu:, :n] = R @ sys.C
    M[n + nu:, n + nu:] = Q
    z0 = np.zeros(n + nu + nq)
    if x0 is not None:
        z0[:n] = x0
    z0[n:n + nu] = gen.omega0
    if varpi0 is not None:
        z0[n + nu:] = varpi0
    times = np.asarray(times, dtype=float)
    Z = _step(M, z0, times)
    return (Trajectory(times, Z[:, :n]), Trajectory(times, Z[:, n:n + nu]),
            Trajectory(times, Z[:, n + nu:]))


def simulate_input(sys, u, times, x0=None):
    """Zero-order-hold response to sampled input ``u`` of shape ``(N, m)``.

    Used to time reduced and full models on identical excitation.
    """
    times = np.asarray(times, dtype=float)
    dt = grid_step(times)
    u = np.asarray(u, dtype=float).reshape(times.size, sys.m)
    n, m = sys.n, sys.m
    M = np.zeros((n + m, n + m))
    M[:n, :n] = sys.A
    M[:n, n:] = sys.B
    E = propagator(M, dt)
    Ad, Bd = E[:n, :n], E[:n, n:]
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    Y = np.empty((times.size, sys.p))
    for k in range(times.size):
        Y[k] = sys.C @ x
        x = Ad @ x + Bd @ u[k]
    return Trajectory(times, Y)


def transfer_eval(sys, s, *, guard=1e-10):
    """``W(s) = C (sI - A)^{-1} B`` by one LU solve.

    Raises :class:`SingularPointError` when `s` is within
    ``guard * ||A||`` of an eigenvalue of ``A``.
    """
    s = complex(s)
    poles = sys.poles
    if poles.size:
        i = int(np.argmin(np.abs(poles - s)))
        if abs(poles[i] - s) <= guard * max(np.linalg.norm(sys.A, 2), 1.0):
            raise SingularPointError(
                f"s={s} coincides with eigenvalue {poles[i]} of A", poles[i])
    M = s * np.eye(sys.n) - sys.A
    try:
        lu = spla.lu_factor(M, check_finite=False)
        X = spla.lu_solve(lu, sys.B.astype(complex), check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularPointError(f"(sI - A) singular at s={s}", poles[i]) from exc
    return sys.C @ X


def spectrum(M):
    """Eigenvalues sorted by real part, then imaginary part."""
    if isinstance(M, StateSpace):
        M = M.A
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"spectrum needs a square matrix, got shape {M.shape}")
    ev = np.linalg.eigvals(M).astype(complex)
    order = np.lexsort((ev.imag, ev.real))
    return ev[order]
