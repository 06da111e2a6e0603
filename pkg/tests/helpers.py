"""Independent reference computations used as test oracles."""

import numpy as np


def rk4_reference(M, z0, times, refine=100):
    """Classical RK4 on ``z' = Mz`` with step ``dt / refine``; samples on `times`."""
    dt = times[1] - times[0]
    h = dt / refine
    z = np.array(z0, dtype=float)
    out = np.empty((times.size, z.size))
    for k in range(times.size):
        out[k] = z
        for _ in range(refine):
            k1 = M @ z
            k2 = M @ (z + 0.5 * h * k1)
            k3 = M @ (z + 0.5 * h * k2)
            k4 = M @ (z + h * k3)
            z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return out


def cofactor_det(M):
    """Determinant by Laplace expansion along the first remaining row (memoised on columns)."""
    n = len(M)
    memo = {}

    def det(depth, cols):
        if depth == n:
            return 1.0
        key = cols
        if key in memo:
            return memo[key]
        total = 0.0
        for pos, c in enumerate(cols):
            entry = M[depth][c]
            if entry != 0:
                sign = -1.0 if pos % 2 else 1.0
                total += sign * entry * det(depth + 1, cols[:pos] + cols[pos + 1:])
        memo[key] = total
        return total

    return det(0, tuple(range(n)))


def cofactor_inverse(M):
    """``adj(M) / det(M)`` from explicit cofactors; Python scalars only."""
    M = [[complex(x) for x in row] for row in np.asarray(M)]
    n = len(M)
    d = cofactor_det(M)
    inv = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for r, row in enumerate(M) if r != i]
            inv[j, i] = (-1) ** (i + j) * cofactor_det(minor) / d
    return inv


def fit_decay_rate(times, values, window):
    """Slope of ``log`` of the windowed running maximum of ``|values|``.

    Taking the maximum over windows at least one oscillation period long
    removes the zero crossings of oscillating transients before the fit.
    """
    times = np.asarray(times)
    values = np.abs(np.asarray(values))
    edges = np.arange(times[0], times[-1] - window, window)
    tt, vv = [], []
    for a in edges:
        sel = (times >= a) & (times < a + window)
        i = np.argmax(values[sel])
        tt.append(times[sel][i])
        vv.append(values[sel][i])
    slope, _ = np.polyfit(tt, np.log(vv), 1)
    return slope


def relative(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)
