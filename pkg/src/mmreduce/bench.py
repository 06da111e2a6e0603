"""Synthetic full-order systems, noise injection and the reduction pipeline.

The stage functions (:func:`collect`, :func:`estimate`, :func:`reduce`) are
shared by the CLI and :func:`run_reduction_experiment`, so both produce the
same numbers for the same parameters.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as spla

from . import io as mio
from .design import Design, design_from_dict, load_design
from .estimation import (EstimationResult, estimate_c_pi, estimate_ups_b,
                         warmup_index)
from .lti import (StateSpace, Trajectory, simulate_autonomous_augmented,
                  simulate_filtered_impulse, simulate_input, spectrum,
                  uniform_grid)
from .oracle import (bode_data, normalised_error, solve_both, verify_rom)
from .rom import build_one_sided_right, build_two_sided, solve_ups_pi

__all__ = [
    "SystemSpec",
    "NoiseSpec",
    "RunSpec",
    "BodeSpec",
    "BenchConfig",
    "ExperimentData",
    "StageError",
    "random_stable_system",
    "ladder_network",
    "make_system",
    "add_noise",
    "collect",
    "estimate",
    "reduce",
    "default_k0",
    "run_reduction_experiment",
    "max_threads",
]

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.__cause__ = exc


def max_threads():
    try:
        return max(1, int(os.environ.get("MM_REDUCE_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------- systems

def random_stable_system(n, m, p, real_range=(-3.0, -0.5), freq_range=(0.5, 30.0),
                         seed=0, *, verify=True):
    """Random stable system with a prescribed spectral envelope.

    Conjugate pairs ``a +- iw`` with ``a`` in `real_range` and ``w`` in
    `freq_range` (plus one real mode when `n` is odd) are placed in a
    block-diagonal matrix and mixed by ``T = U diag(d)``, ``U`` orthogonal
    and ``d`` in ``[0.5, 2]``, so ``cond(T) <= 4``.
    """
    lo, hi = map(float, real_range)
    wlo, whi = map(float, freq_range)
    if not (lo <= hi < 0):
        raise ValueError(f"real-part range must satisfy lo <= hi < 0, got {real_range}")
    if not (0 < wlo <= whi):
        raise ValueError(f"frequency range must satisfy 0 < lo <= hi, got {freq_range}")
    if n < 1 or m < 1 or p < 1:
        raise ValueError("n, m, p must be positive")
    rng = np.random.default_rng(seed)
    pairs = n // 2
    a = rng.uniform(lo, hi, pairs)
    w = rng.uniform(wlo, whi, pairs)
    Lam = np.zeros((n, n))
    for k in range(pairs):
        i = 2 * k
        Lam[i:i + 2, i:i + 2] = [[a[k], w[k]], [-w[k], a[k]]]
    if n % 2:
        Lam[-1, -1] = rng.uniform(lo, hi)
    U = spla.qr(rng.standard_normal((n, n)))[0]
    d = rng.uniform(0.5, 2.0, n)
    A = (U * d) @ Lam @ (U / d).T
    B = rng.standard_normal((n, m)) / math.sqrt(n)
    C = rng.standard_normal((p, n)) / math.sqrt(n)
    sys = StateSpace(A, B, C)
    if verify:
        ev = sys.poles
        slack = 1e-8 * max(1.0, abs(lo), whi)
        if (np.any(ev.real < lo - slack) or np.any(ev.real > hi + slack)
                or np.any(np.abs(ev.imag) > whi + slack)):
            raise ValueError("constructed spectrum left the requested envelope")
    return sys


def ladder_network(sections, resistance, inductance, capacitance):
    """Series R-L / shunt C ladder driven by voltage sources at both ends.

    State ``[i_1..i_N, v_1..v_N]``: inductor currents and node voltages.
    Port 1 is a source in series with branch 1, port 2 a source in series
    with branch N; the outputs are the two port currents ``i_1`` and ``i_N``::

        L_k i_k' = v_{k-1} - v_k - R_k i_k (+ u_1 if k = 1) (+ u_2 if k = N)
        C_k v_k' = i_k - i_{k+1},      v_0 = 0, i_{N+1} = 0
    """
    N = int(sections)
    if N < 1:
        raise ValueError("need at least one section")
    R = np.broadcast_to(np.asarray(resistance, dtype=float), (N,))
    Lv = np.broadcast_to(np.asarray(inductance, dtype=float), (N,))
    Cv = np.broadcast_to(np.asarray(capacitance, dtype=float), (N,))
    if np.any(R <= 0):
        raise ValueError("every section needs positive resistance (R = 0 is only "
                         "marginally stable)")
    if np.any(Lv <= 0) or np.any(Cv <= 0):
        raise ValueError("inductances and capacitances must be positive")
    A = np.zeros((2 * N, 2 * N))
    for k in range(N):
        A[k, k] = -R[k] / Lv[k]
        A[k, N + k] = -1.0 / Lv[k]
        if k > 0:
            A[k, N + k - 1] = 1.0 / Lv[k]
        A[N + k, k] = 1.0 / Cv[k]
        if k + 1 < N:
            A[N + k, k + 1] = -1.0 / Cv[k]
    B = np.zeros((2 * N, 2))
    B[0, 0] = 1.0 / Lv[0]
    B[N - 1, 1] += 1.0 / Lv[N - 1]
    C = np.zeros((2, 2 * N))
    C[0, 0] = 1.0
    C[1, N - 1] = 1.0
    return StateSpace(A, B, C)


@dataclass
class SystemSpec:
    kind: str = "random"
    n: int = 50
    m: int = 2
    p: int = 2
    real_part_range: tuple = (-3.0, -0.5)
    freq_range: tuple = (0.5, 30.0)
    seed: int = 0
    resistance: float = 1.0
    inductance: float = 1.0e-3
    capacitance: float = 1.0e-3


def make_system(spec):
    if spec.kind == "random":
        return random_stable_system(spec.n, spec.m, spec.p, spec.real_part_range,
                                    spec.freq_range, spec.seed)
    if spec.kind == "ladder":
        if spec.n % 2:
            raise ValueError("ladder order must be even (two states per section)")
        return ladder_network(spec.n // 2, spec.resistance, spec.inductance,
                              spec.capacitance)
    raise ValueError(f"unknown system kind {spec.kind!r}")


# ------------------------------------------------------------------ noise

def add_noise(traj, snr_db, seed):
    """Additive white Gaussian noise at `snr_db` per channel.

    The signal power of each channel is its empirical mean square over the
    trajectory; ``snr_db = inf`` (or None) returns `traj` unchanged.
    """
    if snr_db is None or math.isinf(snr_db):
        return traj
    if math.isnan(snr_db):
        raise ValueError("snr_db must be a number")
    rng = np.random.default_rng(seed)
    power = np.mean(traj.samples ** 2, axis=0)
    sigma = np.sqrt(power * 10.0 ** (-snr_db / 10.0))
    noise = rng.standard_normal(traj.samples.shape) * sigma
    return Trajectory(traj.times, traj.samples + noise)


# ----------------------------------------------------------- pipeline data

@dataclass
class ExperimentData:
    """Sampled signals from the direct interconnection and the impulse experiments."""

    omega: Trajectory
    y: Trajectory
    varpi: list

    @property
    def times(self):
        return self.omega.times

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        mio.write_trajectory(d / "omega.csv", self.omega)
        mio.write_trajectory(d / "y.csv", self.y)
        files = ["omega.csv", "y.csv"]
        for j, v in enumerate(self.varpi):
            mio.write_trajectory(d / f"varpi_in{j}.csv", v)
            files.append(f"varpi_in{j}.csv")
        meta = {"files": files, "inputs": len(self.varpi),
                "samples": int(self.times.size)}
        (d / "collect.json").write_text(json.dumps(meta, indent=1))
        return files

    @classmethod
    def load(cls, directory):
        d = Path(directory)
        omega = mio.read_trajectory(d / "omega.csv")
        y = mio.read_trajectory(d / "y.csv")
        varpi = []
        j = 0
        while (d / f"varpi_in{j}.csv").exists():
            varpi.append(mio.read_trajectory(d / f"varpi_in{j}.csv"))
            j += 1
        return cls(omega=omega, y=y, varpi=varpi)


def collect(sys, design, dt, duration):
    """Simulate the direct interconnection and one impulse experiment per input."""
    sys.check_stable()
    times = uniform_grid(dt, duration)
    y, omega = simulate_autonomous_augmented(sys, design.generator, None, times)
    varpi = [simulate_filtered_impulse(sys, design.filter, j, times)
             for j in range(sys.m)]
    return ExperimentData(omega=omega, y=y, varpi=varpi)


def default_k0(times, decay_rate=None, periods=8.0):
    """Warm-up index: ``periods / |max Re sigma(A)|`` seconds when the model is known."""
    if decay_rate is None:
        return 0
    return warmup_index(times, periods / abs(decay_rate))


def estimate(data, design, *, nu_tilde=None, q_tilde=1, eta=1e-9, k0=0,
             stride=1, k0_ups=None, counters=None):
    """Run both estimators; ``k0_ups`` defaults to ``k0``."""
    counters = {} if counters is None else counters
    c_pi, dc = estimate_c_pi(data.omega, data.y, nu_tilde, eta, k0, stride=stride,
                             counters=counters)
    ups_b, du = estimate_ups_b(design.filter, data.varpi, q_tilde, eta,
                               k0 if k0_ups is None else k0_ups, counters=counters)
    return EstimationResult(c_pi=c_pi, ups_b=ups_b, c_pi_diagnostics=dc,
                            ups_b_diagnostics=du, counters=dict(counters))


def reduce(est, design):
    """Solve for ``Ups Pi`` and build the two-sided model; fills ``est.ups_pi``."""
    g, f = design.generator, design.filter
    est.ups_pi = solve_ups_pi(g.S, g.L, f.Q, f.R, est.c_pi, est.ups_b)
    return build_two_sided(g.S, g.L, est.c_pi, est.ups_b, est.ups_pi, Q=f.Q, R=f.R)


# ------------------------------------------------------------ experiments

@dataclass
class NoiseSpec:
    snr_db: float | None = None
    realisations: int = 20
    seed: int = 0
    on_varpi: bool = True
    on_y: bool = False
    q_tilde: int = 1000
    nu_tilde: int | None = None


@dataclass
class RunSpec:
    dt: float = 0.01
    duration: float = 60.0
    k0: int | None = None
    nu_tilde: int | None = None
    q_tilde: int = 1
    eta: float = 1e-9
    stride: int = 20


@dataclass
class BodeSpec:
    fmin: float = 0.1
    fmax: float = 1.0e4
    points: int = 200


@dataclass
class BenchConfig:
    system: SystemSpec = field(default_factory=SystemSpec)
    design: dict | str = field(default_factory=lambda: {
        "right": {"freqs_rad_s": [1.0, 3.0, 10.0], "direction": [1.0, 4.0]},
        "left": {"freqs_rad_s": [2.0, 5.0, 20.0], "direction": [4.0, 1.0]},
    })
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    run: RunSpec = field(default_factory=RunSpec)
    bode: BodeSpec = field(default_factory=BodeSpec)
    output_dir: str | None = None
    oracle_max_n: int = 3000

    def __post_init__(self):
        if self.noise.realisations < 1:
            raise ValueError("realisations must be >= 1")
        if self.noise.snr_db is not None and math.isnan(self.noise.snr_db):
            raise ValueError("snr_db must be finite or null")

    def load_design(self, base=None):
        if isinstance(self.design, str):
            path = Path(self.design)
            if base is not None and not path.is_absolute():
                path = Path(base) / path
            return load_design(path)
        return design_from_dict(self.design)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        sections = {"system": SystemSpec, "noise": NoiseSpec, "run": RunSpec,
                    "bode": BodeSpec}
        kw = {}
        for key, typ in sections.items():
            if key in d:
                kw[key] = typ(**d.pop(key))
        kw.update(d)
        return cls(**kw)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def _stage(name, fn, *args, **kwargs):
    try:
        return _timed(fn, *args, **kwargs)
    except Exception as exc:  # relabel with the stage name
        raise StageError(name, exc) from exc


def _noise_realisation(r, cfg, data, design, clean, k0, grid):
    seed = cfg.noise.seed + r
    rng_seeds = np.random.SeedSequence(seed).generate_state(len(data.varpi) + 1)
    varpi = [add_noise(v, cfg.noise.snr_db, int(s)) if cfg.noise.on_varpi else v
             for v, s in zip(data.varpi, rng_seeds[1:])]
    g, f = design.generator, design.filter
    if cfg.noise.on_y:
        y = add_noise(data.y, cfg.noise.snr_db, int(rng_seeds[0]))
        nu_t = cfg.noise.nu_tilde or 50 * g.nu
        c_pi, _ = estimate_c_pi(data.omega, y, nu_t, cfg.run.eta, k0,
                                stride=cfg.run.stride)
    else:
        c_pi = clean.c_pi
    out = {}
    for label, q in (("robust", cfg.noise.q_tilde), ("nonrobust", 1)):
        ups_b, _ = estimate_ups_b(f, varpi, q, cfg.run.eta, k0)
        ups_pi = solve_ups_pi(g.S, g.L, f.Q, f.R, c_pi, ups_b)
        rom = build_two_sided(g.S, g.L, c_pi, ups_b, ups_pi, Q=f.Q, R=f.R)
        out[label] = {"c_pi": c_pi, "ups_b": ups_b, "ups_pi": ups_pi,
                      "mag_db": bode_data(rom, grid).mag_db}
    return out


def run_reduction_experiment(cfg, out_dir=None, *, config_dir=None):
    """Execute the full pipeline for `cfg` and write the results bundle.

    Returns a dict with errors, verification summaries and timings.  When
    `out_dir` (or ``cfg.output_dir``) is set, artifacts and a manifest are
    written there.
    """
    out_dir = out_dir or cfg.output_dir
    manifest = []
    timings = {}

    sys, timings["system"] = _stage("system", make_system, cfg.system)
    _stage("stability", sys.check_stable)
    design, _ = _stage("design", cfg.load_design, config_dir)
    _stage("design", design.check_disjoint)
    data, timings["data_generation"] = _stage(
        "collect", collect, sys, design, cfg.run.dt, cfg.run.duration)
    k0 = cfg.run.k0 if cfg.run.k0 is not None else default_k0(data.times, sys.decay_rate())

    est, timings["estimation"] = _stage(
        "estimate", estimate, data, design, nu_tilde=cfg.run.nu_tilde,
        q_tilde=cfg.run.q_tilde, eta=cfg.run.eta, k0=k0, stride=cfg.run.stride)
    rom, timings["reduction"] = _stage("reduce", reduce, est, design)
    timings["extraction_dd"] = timings["estimation"] + timings["reduction"]

    results = {
        "order_fom": sys.n, "order_rom": rom.order, "k0": int(k0),
        "converged": est.converged, "rom_stable": rom.diagnostics["stable"],
        "cond_ups_pi": rom.diagnostics["cond_ups_pi"],
    }
    g, f = design.generator, design.filter
    grid = np.logspace(np.log10(cfg.bode.fmin), np.log10(cfg.bode.fmax), cfg.bode.points)
    artifacts = {"rom_dd.mtx": ("reduce", lambda p: mio.save_rom(p, rom)),
                 "estimate.json": ("estimate", est.save)}

    truth = None
    if sys.n <= cfg.oracle_max_n:
        def model_based():
            sol = solve_both(sys, g, f)
            c_pi, ups_b, ups_pi = sys.C @ sol.pi, sol.upsilon @ sys.B, sol.upsilon @ sol.pi
            return sol, build_two_sided(g.S, g.L, c_pi, ups_b, ups_pi, Q=f.Q, R=f.R)
        (sol, rom_mb), timings["extraction_mb"] = _stage("oracle", model_based)
        truth = {"c_pi": sys.C @ sol.pi, "ups_b": sol.upsilon @ sys.B,
                 "ups_pi": sol.upsilon @ sol.pi}
        results["e_c_pi"] = normalised_error(est.c_pi, truth["c_pi"])
        results["e_ups_b"] = normalised_error(est.ups_b, truth["ups_b"])
        results["e_ups_pi"] = normalised_error(est.ups_pi, truth["ups_pi"])
        rep_dd = verify_rom(rom, sys, g, f, 1e-4)
        rep_mb = verify_rom(rom_mb, sys, g, f, 1e-8)
        one = build_one_sided_right(g.S, g.L, truth["c_pi"])
        rep_one = verify_rom(one, sys, g, f, 1e-8)
        results["verify_dd"] = rep_dd.to_dict()
        results["verify_mb"] = rep_mb.to_dict()
        results["verify_right_only"] = rep_one.to_dict()
        artifacts["rom_mb.mtx"] = ("oracle", lambda p: mio.save_rom(p, rom_mb))
        artifacts["bode_rom_mb.csv"] = ("oracle", lambda p: bode_data(rom_mb, grid).to_csv(p))
        artifacts["eig_rom_mb.csv"] = ("oracle", lambda p: _write_eigs(p, rom_mb.F))
        # interpolation data for the moment figures
        artifacts["interpolation.json"] = ("oracle", lambda p: _write_json(p, {
            "two_sided_dd": rep_dd.to_dict(), "two_sided_mb": rep_mb.to_dict(),
            "right_only": rep_one.to_dict()}))

    # elapsed time of a simulation driven by the generator signal
    u = data.omega.samples @ g.L.T
    _, timings["elapsed_rom"] = _stage("elapsed", simulate_input, rom.as_statespace(),
                                       u, data.times)
    _, timings["elapsed_fom"] = _stage("elapsed", simulate_input, sys, u, data.times)

    artifacts["bode_fom.csv"] = ("bode", lambda p: bode_data(sys, grid).to_csv(p))
    artifacts["bode_rom_dd.csv"] = ("bode", lambda p: bode_data(rom, grid).to_csv(p))
    artifacts["eig_fom.csv"] = ("spectrum", lambda p: _write_eigs(p, sys.A))
    artifacts["eig_rom_dd.csv"] = ("spectrum", lambda p: _write_eigs(p, rom.F))

    if cfg.noise.snr_db is not None and not math.isinf(cfg.noise.snr_db):
        results["noise"], env = _stage("noise", _noise_study, cfg, data, design, est,
                                       k0, grid, truth, rom)[0]
        artifacts["noise_envelopes.csv"] = ("noise", lambda p: _write_envelopes(p, grid, env))

    results["table"] = [
        {"model": "FOM", "order": sys.n, "extraction_time": None,
         "elapsed_time": timings["elapsed_fom"]},
        {"model": "ROM", "order": rom.order, "extraction_time": timings.get("extraction_mb"),
         "elapsed_time": None},
        {"model": "ROM_DD", "order": rom.order, "extraction_time": timings["extraction_dd"],
         "elapsed_time": timings["elapsed_rom"]},
    ]
    results["timings"] = timings

    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, (stage, writer) in artifacts.items():
            writer(d / name)
            manifest.append({"file": name, "stage": stage})
        _write_json(d / "results.json", results)
        manifest.append({"file": "results.json", "stage": "bench"})
        _write_json(d / "config.json", cfg.to_dict())
        manifest.append({"file": "config.json", "stage": "bench"})
        _write_json(d / "manifest.json", {"files": manifest})
    return results


def _noise_study(cfg, data, design, clean, k0, grid, truth, rom_clean):
    reals = range(cfg.noise.realisations)
    with ThreadPoolExecutor(max_workers=max_threads()) as pool:
        runs = list(pool.map(
            lambda r: _noise_realisation(r, cfg, data, design, clean, k0, grid), reals))
    ref = truth or {"c_pi": clean.c_pi, "ups_b": clean.ups_b, "ups_pi": clean.ups_pi}
    summary, env = {}, {}
    clean_mag = bode_data(rom_clean, grid).mag_db
    for label in ("robust", "nonrobust"):
        e_b = [normalised_error(r[label]["ups_b"], ref["ups_b"]) for r in runs]
        e_p = [normalised_error(r[label]["ups_pi"], ref["ups_pi"]) for r in runs]
        mags = np.stack([r[label]["mag_db"] for r in runs])
        lo, hi = mags.min(axis=0), mags.max(axis=0)
        env[label] = (lo, hi)
        inside = (clean_mag >= lo - 1e-12) & (clean_mag <= hi + 1e-12)
        summary[label] = {"e_ups_b": e_b, "e_ups_pi": e_p,
                          "mean_e_ups_b": float(np.mean(e_b)),
                          "mean_e_ups_pi": float(np.mean(e_p)),
                          "clean_inside_fraction": float(np.mean(inside))}
        if cfg.noise.on_y:
            summary[label]["e_c_pi"] = [normalised_error(r[label]["c_pi"], ref["c_pi"])
                                        for r in runs]
    width_r = env["robust"][1] - env["robust"][0]
    width_n = env["nonrobust"][1] - env["nonrobust"][0]
    summary["robust_band_tighter_fraction"] = float(np.mean(width_r <= width_n))
    summary["ratio_e_ups_b"] = (summary["robust"]["mean_e_ups_b"]
                                / summary["nonrobust"]["mean_e_ups_b"])
    summary["ratio_e_ups_pi"] = (summary["robust"]["mean_e_ups_pi"]
                                 / summary["nonrobust"]["mean_e_ups_pi"])
    env["clean"] = clean_mag
    return summary, env


def _write_json(path, obj):
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer, np.bool_)):
            return o.item()
        raise TypeError(type(o))
    Path(path).write_text(json.dumps(obj, indent=1, default=default))


def _write_eigs(path, M):
    ev = spectrum(M)
    np.savetxt(path, np.column_stack([ev.real, ev.imag]), delimiter=",", fmt="%.17g",
               header="real,imag", comments="")


def _write_envelopes(path, grid, env):
    p, m = env["clean"].shape[1:]
    header = ["freq_rad_s"]
    cols = [grid]
    for i in range(p):
        for j in range(m):
            tag = f"{i + 1}{j + 1}"
            header += [f"clean_{tag}", f"robust_lo_{tag}", f"robust_hi_{tag}",
                       f"nonrobust_lo_{tag}", f"nonrobust_hi_{tag}"]
            cols += [env["clean"][:, i, j], env["robust"][0][:, i, j],
                     env["robust"][1][:, i, j], env["nonrobust"][0][:, i, j],
                     env["nonrobust"][1][:, i, j]]
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g",
               header=",".join(header), comments="")
