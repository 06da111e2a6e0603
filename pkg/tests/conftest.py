import functools

import numpy as np
import pytest

from mmreduce.bench import collect, default_k0, estimate, random_stable_system, reduce
from mmreduce.design import design_from_dict
from mmreduce.oracle import solve_both

STANDARD_DESIGN = {
    "right": {"freqs_rad_s": [1.0, 3.0, 10.0], "direction": [1.0, 4.0]},
    "left": {"freqs_rad_s": [2.0, 5.0, 20.0], "direction": [4.0, 1.0]},
}

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def standard_design():
    return design_from_dict(STANDARD_DESIGN)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@functools.lru_cache(maxsize=None)
def standard_case(seed, n=50, duration=60.0, dt=0.01, stride=20, eta=1e-9):
    """Noise-free pipeline run on the standard design, with oracle truth."""
    design = design_from_dict(STANDARD_DESIGN)
    sys = random_stable_system(n, 2, 2, seed=seed)
    data = collect(sys, design, dt, duration)
    k0 = default_k0(data.times, sys.decay_rate())
    est = estimate(data, design, eta=eta, k0=k0, stride=stride)
    rom = reduce(est, design)
    sol = solve_both(sys, design.generator, design.filter)
    truth = {"pi": sol.pi, "upsilon": sol.upsilon, "c_pi": sys.C @ sol.pi,
             "ups_b": sol.upsilon @ sys.B, "ups_pi": sol.upsilon @ sol.pi}
    return {"sys": sys, "design": design, "data": data, "k0": k0, "est": est,
            "rom": rom, "truth": truth}
