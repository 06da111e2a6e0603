"""Data-driven estimation of C*Pi and Upsilon*B from sampled trajectories.

``estimate_c_pi`` fits the steady-state map ``y = (C Pi) w`` on a sliding
window of generator snapshots; ``estimate_ups_b_robust`` fits
``v(t) = exp(Qt) (Upsilon B e_j)`` on a window of filtered impulse-response
snapshots.  Both iterate over the snapshot sequence until the estimate's
rate of change drops below a threshold.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .design import exact_exp, exact_exp_batch
from .lti import DimensionError, Trajectory

__all__ = [
    "EstimationError",
    "SnapshotWindow",
    "EstimateDiagnostics",
    "EstimationResult",
    "estimate_c_pi",
    "estimate_ups_b_instant",
    "estimate_ups_b_robust",
    "estimate_ups_b",
    "warmup_index",
    "exact_exp_series",
]


class EstimationError(RuntimeError):
    """Data cannot support the requested estimate (e.g. rank never reached)."""


class SnapshotWindow:
    """Fixed-width ring buffer of ``(time, row)`` snapshots, oldest first."""

    def __init__(self, width):
        if width < 1:
            raise ValueError("window width must be positive")
        self.width = int(width)
        self._times = deque(maxlen=self.width)
        self._rows = deque(maxlen=self.width)

    def push(self, t, row):
        if self._times and t <= self._times[-1]:
            raise ValueError("snapshot times must be strictly increasing")
        self._times.append(float(t))
        self._rows.append(np.asarray(row, dtype=float))

    @property
    def full(self):
        return len(self._rows) == self.width

    def __len__(self):
        return len(self._rows)

    def times(self):
        return np.fromiter(self._times, float, len(self._times))

    def matrix(self):
        return np.vstack(self._rows)


@dataclass
class EstimateDiagnostics:
    """Convergence record for one estimated row or column."""

    log: list = field(default_factory=list)  # (t_k, rate) pairs
    converged: bool = False
    t_final: float = float("nan")
    width: int = 0

    def to_dict(self):
        return {"log": [[t, r] for t, r in self.log], "converged": self.converged,
                "t_final": self.t_final, "width": self.width}

    @classmethod
    def from_dict(cls, d):
        return cls(log=[tuple(x) for x in d["log"]], converged=bool(d["converged"]),
                   t_final=float(d["t_final"]), width=int(d["width"]))


def warmup_index(times, t_warm):
    """First sample index with ``t >= t_warm``."""
    return int(np.searchsorted(np.asarray(times), t_warm - 1e-12))


def _subsample(traj, stride):
    if stride < 1:
        raise ValueError("stride must be >= 1")
    return traj.times[::stride], traj.samples[::stride]


def _per_channel(eta, count):
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (count,)).copy()
    if np.any(eta < 0):
        raise ValueError("rate thresholds must be nonnegative")
    return eta


def estimate_c_pi(omega_traj, y_traj, nu_tilde=None, eta=1e-9, k0=0, *,
                  stride=1, counters=None):
    """Estimate ``C Pi`` row by row from generator and output snapshots.

    Parameters
    ----------
    omega_traj, y_traj : Trajectory
        Generator state and plant output on a shared time grid.
    nu_tilde : int, optional
        Window width (defaults to ``nu``).  Widened by ``nu`` whenever the
        snapshot matrix is rank deficient.
    eta : float or array_like
        Per-row thresholds on ``||dC^jPi|| / (t_k - t_{k-1})``.
    k0 : int
        Warm-up index into the trajectories; earlier samples are never the
        newest row of a window.
    stride : int
        Spacing (in grid samples) of the snapshot sequence ``t_k``.
    counters : dict, optional
        Incremented in place with ``solves`` and ``rows`` counts.

    Returns
    -------
    (ndarray, list of EstimateDiagnostics)
        The ``p x nu`` estimate and one diagnostics record per output row.
    """
    if omega_traj.times.shape != y_traj.times.shape or not np.allclose(
            omega_traj.times, y_traj.times, rtol=0, atol=1e-12):
        raise DimensionError("omega and y trajectories must share a time grid")
    ts, W = _subsample(omega_traj, stride)
    _, Y = _subsample(y_traj, stride)
    nu, p = W.shape[1], Y.shape[1]
    etas = _per_channel(eta, p)
    width = nu if nu_tilde is None else int(nu_tilde)
    if width < nu:
        raise ValueError(f"nu_tilde={width} must be at least nu={nu}")
    K = ts.size
    k = max(-(-int(k0) // stride), width - 1)
    if k >= K:
        raise EstimationError("not enough samples after warm-up for one window")

    diags = [EstimateDiagnostics() for _ in range(p)]
    result = np.full((p, nu), np.nan)
    prev = None
    counters = {} if counters is None else counters
    counters.setdefault("solves", 0)
    counters.setdefault("rows", 0)

    window = SnapshotWindow(width)
    for i in range(k - width + 1, k + 1):
        window.push(ts[i], np.concatenate([W[i], Y[i]]))
    while True:
        block = window.matrix()
        Rk, Ek = block[:, :nu], block[:, nu:]
        sol, _, rank, sv = np.linalg.lstsq(Rk, Ek, rcond=None)
        counters["solves"] += 1
        counters["rows"] += width
        tol = width * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
        if int(np.sum(sv > tol)) < nu:
            # widen, refilling from the data since the buffer only holds `width` rows
            width += nu
            if width > K:
                raise EstimationError(
                    "snapshot matrix never reached full rank; the experiment "
                    "is not exciting enough")
            k = max(k, width - 1)
            if k >= K:
                raise EstimationError("data exhausted while widening the window")
            window = SnapshotWindow(width)
            for i in range(k - width + 1, k + 1):
                window.push(ts[i], np.concatenate([W[i], Y[i]]))
            prev = None
            continue
        est = sol.T
        if prev is not None:
            rates = np.linalg.norm(est - prev, axis=1) / (ts[k] - ts[k - 1])
            for j in range(p):
                if diags[j].converged:
                    continue
                diags[j].log.append((float(ts[k]), float(rates[j])))
                if rates[j] <= etas[j]:
                    result[j] = est[j]
                    diags[j].converged = True
                    diags[j].t_final = float(ts[k])
                    diags[j].width = width
        prev = est
        if all(d.converged for d in diags) or k + 1 >= K:
            break
        k += 1
        window.push(ts[k], np.concatenate([W[k], Y[k]]))
    for j in range(p):
        if not diags[j].converged:
            result[j] = prev[j]
            diags[j].t_final = float(ts[k])
            diags[j].width = width
    return result, diags


def exact_exp_series(Q, times):
    """Stack of ``exp(Q t)`` for every ``t`` in `times`, shape ``(N, nu, nu)``."""
    return exact_exp_batch(Q, times)


def estimate_ups_b_instant(filt, varpi_sample, t_k):
    """Single-snapshot estimate ``exp(-Q t_k) v(t_k)`` of ``Upsilon B e_j``."""
    v = np.asarray(varpi_sample, dtype=float).reshape(-1)
    if v.size != filt.nu:
        raise DimensionError(f"sample must have {filt.nu} entries, got {v.size}")
    return exact_exp(filt.Q, -t_k) @ v


def _rotate_back(Q, ts, V):
    # exp(-Q t_i) v(t_i) for all i; exp(Qt) is orthogonal so exp(-Qt) = exp(Qt)^T
    E = exact_exp_series(Q, ts)
    return np.einsum("kji,kj->ki", E, V)


def estimate_ups_b_robust(filt, varpi_traj, q_tilde=1, eta=1e-9, k0=0, *,
                          stride=1, solver="structured", counters=None):
    """Windowed least-squares estimate of one column ``Upsilon B e_j``.

    Solves ``min ||P x - O||`` where ``P`` stacks ``exp(Q t_i)`` and ``O``
    stacks ``v(t_i)`` over the last `q_tilde` snapshots, advancing until the
    rate of change falls below `eta` or the data ends.

    ``solver="lstsq"`` factorises ``P`` at every step.  ``solver="structured"``
    (default) uses that ``P / sqrt(q)`` has orthonormal columns, so the QR
    factors are known in closed form and the solution is the window mean of
    ``exp(-Q t_i) v(t_i)``.
    """
    if q_tilde < 1:
        raise ValueError("q_tilde must be >= 1")
    q = int(q_tilde)
    ts, V = _subsample(varpi_traj, stride)
    nu = filt.nu
    if V.shape[1] != nu:
        raise DimensionError(f"varpi must have {nu} channels, got {V.shape[1]}")
    K = ts.size
    start = max(-(-int(k0) // stride), q)
    if start >= K:
        raise EstimationError("not enough samples after warm-up for one window")
    counters = {} if counters is None else counters
    counters.setdefault("solves", 0)
    counters.setdefault("rows", 0)
    diag = EstimateDiagnostics(width=q)

    if solver == "structured":
        inst = _rotate_back(filt.Q, ts[start - q:], V[start - q:])
        win = np.lib.stride_tricks.sliding_window_view(inst, q, axis=0)
        est = win.sum(axis=-1) / q  # est[i] is the window ending at k = start - 1 + i
        counters["solves"] += est.shape[0]
        counters["rows"] += est.shape[0] * q * nu
        rates = np.linalg.norm(np.diff(est, axis=0), axis=1) / np.diff(ts[start - 1:])
        hit = np.nonzero(rates <= eta)[0]
        stop = hit[0] if hit.size else rates.size - 1
        diag.log = [(float(t), float(r)) for t, r in zip(ts[start:start + stop + 1],
                                                          rates[:stop + 1])]
        diag.converged = bool(hit.size)
        diag.t_final = float(ts[start + stop])
        return est[stop + 1], diag

    if solver != "lstsq":
        raise ValueError(f"unknown solver {solver!r}")
    prev = None
    for k in range(start - 1, K):
        sl = slice(k - q + 1, k + 1)
        P = exact_exp_series(filt.Q, ts[sl]).reshape(q * nu, nu)
        O = V[sl].reshape(q * nu)
        x = np.linalg.lstsq(P, O, rcond=None)[0]
        counters["solves"] += 1
        counters["rows"] += q * nu
        if prev is not None:
            rate = float(np.linalg.norm(x - prev) / (ts[k] - ts[k - 1]))
            diag.log.append((float(ts[k]), rate))
            if rate <= eta:
                diag.converged = True
                diag.t_final = float(ts[k])
                return x, diag
        prev = x
    diag.t_final = float(ts[-1])
    return prev, diag


def estimate_ups_b(filt, varpi_trajs, q_tilde=1, eta=1e-9, k0=0, *, stride=1,
                   solver="structured", counters=None):
    """Estimate all columns of ``Upsilon B``, one impulse experiment per input."""
    etas = _per_channel(eta, len(varpi_trajs))
    cols, diags = [], []
    for j, traj in enumerate(varpi_trajs):
        x, d = estimate_ups_b_robust(filt, traj, q_tilde, etas[j], k0,
                                     stride=stride, solver=solver,
                                     counters=counters)
        cols.append(x)
        diags.append(d)
    return np.column_stack(cols), diags


@dataclass
class EstimationResult:
    """Estimated interpolation data plus convergence diagnostics."""

    c_pi: np.ndarray
    ups_b: np.ndarray
    ups_pi: np.ndarray | None = None
    c_pi_diagnostics: list = field(default_factory=list)
    ups_b_diagnostics: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)

    @property
    def converged(self):
        return (all(d.converged for d in self.c_pi_diagnostics)
                and all(d.converged for d in self.ups_b_diagnostics))

    def to_dict(self):
        def mat(M):
            return None if M is None else np.asarray(M).tolist()
        return {
            "c_pi": mat(self.c_pi),
            "ups_b": mat(self.ups_b),
            "ups_pi": mat(self.ups_pi),
            "c_pi_converged": [d.converged for d in self.c_pi_diagnostics],
            "ups_b_converged": [d.converged for d in self.ups_b_diagnostics],
            "c_pi_diagnostics": [d.to_dict() for d in self.c_pi_diagnostics],
            "ups_b_diagnostics": [d.to_dict() for d in self.ups_b_diagnostics],
            "counters": dict(self.counters),
        }

    @classmethod
    def from_dict(cls, d):
        ups_pi = d.get("ups_pi")
        return cls(
            c_pi=np.atleast_2d(np.asarray(d["c_pi"], dtype=float)),
            ups_b=np.atleast_2d(np.asarray(d["ups_b"], dtype=float)),
            ups_pi=None if ups_pi is None else np.atleast_2d(np.asarray(ups_pi, dtype=float)),
            c_pi_diagnostics=[EstimateDiagnostics.from_dict(x)
                              for x in d.get("c_pi_diagnostics", [])],
            ups_b_diagnostics=[EstimateDiagnostics.from_dict(x)
                               for x in d.get("ups_b_diagnostics", [])],
            counters=dict(d.get("counters", {})),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
