import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmreduce.bench import random_stable_system
from mmreduce.design import _eigvecs, build_filter, build_generator, design_from_dict
from mmreduce.linalg import SpectrumOverlapError, numerical_rank, solve_sylvester
from mmreduce.lti import StateSpace, transfer_eval
from mmreduce.oracle import (
    bode_data,
    normalised_error,
    solve_both,
    solve_pi,
    solve_upsilon,
    tangential_moments,
    verify_rom,
)
from mmreduce.rom import build_one_sided_right, build_two_sided, solve_ups_pi

from conftest import STANDARD_DESIGN


@pytest.fixture(scope="module")
def case():
    sys = random_stable_system(6, 2, 2, seed=7)
    return sys, design_from_dict(STANDARD_DESIGN)


# ------------------------------------------------------------ Sylvester

def test_pi_trivial_cases():
    sys = StateSpace(-np.eye(3), np.zeros((3, 2)), np.ones((1, 3)))
    gen = build_generator([1.0, 2.0], [1.0, 4.0])
    np.testing.assert_array_equal(solve_pi(sys, gen), np.zeros((3, 4)))
    scalar = StateSpace([[-1.0]], [[1.0]], [[1.0]])
    np.testing.assert_allclose(solve_pi(scalar, build_generator([0.0], [1.0])), [[1.0]])


def test_upsilon_trivial_cases():
    sys = StateSpace(-np.eye(3), np.ones((3, 1)), np.zeros((2, 3)))
    filt = build_filter([1.0], [4.0, 1.0])
    np.testing.assert_array_equal(solve_upsilon(sys, filt), np.zeros((2, 3)))
    scalar = StateSpace([[-1.0]], [[1.0]], [[1.0]])
    np.testing.assert_allclose(solve_upsilon(scalar, build_filter([0.0], [1.0])), [[1.0]])


def test_pi_spectrum_overlap():
    osc = StateSpace([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), np.eye(2))
    with pytest.raises(SpectrumOverlapError):
        solve_pi(osc, build_generator([1.0], [1.0, 4.0]))


def test_kron_and_schur_agree(case):
    sys, design = case
    a = solve_both(sys, design.generator, design.filter, method="kron")
    b = solve_both(sys, design.generator, design.filter, method="schur")
    np.testing.assert_allclose(a.pi, b.pi, rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(a.upsilon, b.upsilon, rtol=1e-10, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30), st.sampled_from(["kron", "schur"]))
def test_sylvester_residual_certificates(seed, n, method):
    sys = random_stable_system(n, 2, 2, seed=seed)
    design = design_from_dict(STANDARD_DESIGN)
    g, f = design.generator, design.filter
    sol = solve_both(sys, g, f, method=method)
    rp = np.linalg.norm(sys.A @ sol.pi + sys.B @ g.L - sol.pi @ g.S)
    ru = np.linalg.norm(sol.upsilon @ sys.A + f.R @ sys.C - f.Q @ sol.upsilon)
    assert rp <= 1e-8 * (np.linalg.norm(sys.A) + np.linalg.norm(g.S)) * np.linalg.norm(sol.pi)
    assert ru <= 1e-8 * (np.linalg.norm(sys.A) + np.linalg.norm(f.Q)) \
        * np.linalg.norm(sol.upsilon)
    assert sol.pi_residual == pytest.approx(rp, rel=1e-6, abs=1e-15)


def test_generic_sylvester_kernel():
    A = np.diag([1.0, 2.0])
    B = np.diag([-1.0])
    X = solve_sylvester(A, B, np.array([[2.0], [3.0]])).X
    np.testing.assert_allclose(X, [[1.0], [1.0]])
    with pytest.raises(ValueError):
        solve_sylvester(A, B, np.ones((3, 1)))
    with pytest.raises(ValueError):
        solve_sylvester(A, B, np.ones((2, 1)), method="lu")
    assert numerical_rank(np.outer([1, 2], [3, 4])) == 1
    assert numerical_rank(np.zeros((2, 2))) == 0


def test_ups_pi_consistency_chain(case):
    sys, design = case
    g, f = design.generator, design.filter
    sol = solve_both(sys, g, f)
    X = solve_ups_pi(g.S, g.L, f.Q, f.R, sys.C @ sol.pi, sol.upsilon @ sys.B)
    truth = sol.upsilon @ sol.pi
    assert np.linalg.norm(X - truth) <= 1e-8 * np.linalg.norm(truth)


# -------------------------------------------------------------- moments

def test_moment_at_zero_is_dc_gain():
    sys = random_stable_system(5, 2, 2, seed=1)
    gen = build_generator([0.0], [1.0, -1.0])
    (s, l, eta), = tangential_moments(sys, gen).right
    assert s == 0
    np.testing.assert_allclose(eta, sys.C @ np.linalg.solve(-sys.A, sys.B @ l), rtol=1e-12)


def test_moments_from_sylvester_solutions(case):
    # C Pi v_i = W(s_i) L v_i and w_i Ups B = w_i R W(q_i)
    sys, design = case
    g, f = design.generator, design.filter
    sol = solve_both(sys, g, f)
    ms = tangential_moments(sys, g, f)
    _, V = _eigvecs(g.freqs)
    for i, (s, l, eta) in enumerate(ms.right):
        np.testing.assert_allclose(l, g.L @ V[:, i])
        ref = sys.C @ sol.pi @ V[:, i]
        assert np.linalg.norm(eta - ref) <= 1e-8 * np.linalg.norm(ref)
    _, Vq = _eigvecs(f.freqs)
    Wq = np.linalg.inv(Vq)
    for i, (q, r, mu) in enumerate(ms.left):
        ref = Wq[i] @ sol.upsilon @ sys.B
        assert np.linalg.norm(mu - ref) <= 1e-8 * np.linalg.norm(ref)


# ----------------------------------------------------------- verify_rom

def test_verify_report_semantics(case):
    sys, design = case
    g, f = design.generator, design.filter
    sol = solve_both(sys, g, f)
    c_pi, ups_b, ups_pi = sys.C @ sol.pi, sol.upsilon @ sys.B, sol.upsilon @ sol.pi
    two = verify_rom(build_two_sided(g.S, g.L, c_pi, ups_b, ups_pi), sys, g, f)
    assert two.passed and len(two.right_errors) == len(two.left_errors) == g.nu
    assert max(two.worst_right, two.worst_left) <= 1e-8
    d = two.to_dict()
    assert d["passed"] and d["right"]["passed"] and len(d["left"]["points"]) == f.nu
    one = verify_rom(build_one_sided_right(g.S, g.L, c_pi), sys, g, f)
    assert one.passed and not one.left_pass
    # a perturbed two-sided model fails its own claims
    bad = build_two_sided(g.S, g.L, 1.01 * c_pi, ups_b, ups_pi)
    assert not verify_rom(bad, sys, g, f).passed


# ---------------------------------------------------------------- Bode

def test_bode_scalar_half_power_point(tmp_path):
    lag = StateSpace([[-1.0]], [[1.0]], [[1.0]])
    bd = bode_data(lag, [1.0])
    assert bd.mag_db[0, 0, 0] == pytest.approx(-3.0103, abs=1e-4)
    assert bd.phase_deg[0, 0, 0] == pytest.approx(-45.0)
    assert bd.tangential_right([1.0])[0] == pytest.approx(bd.mag_db[0, 0, 0])
    path = tmp_path / "bode.csv"
    bode_data(random_stable_system(4, 2, 2, seed=0), np.logspace(-1, 2, 5)).to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == ("freq_rad_s,mag_db_11,phase_deg_11,mag_db_12,phase_deg_12,"
                      "mag_db_21,phase_deg_21,mag_db_22,phase_deg_22")
    assert np.loadtxt(path, delimiter=",", skiprows=1).shape == (5, 9)


def test_bode_coincides_at_interpolation_frequencies(case):
    sys, design = case
    g, f = design.generator, design.filter
    sol = solve_both(sys, g, f)
    rom = build_two_sided(g.S, g.L, sys.C @ sol.pi, sol.upsilon @ sys.B, sol.upsilon @ sol.pi)
    l, r = np.array([1.0, 4.0]), np.array([4.0, 1.0])
    full, red = bode_data(sys, g.freqs), bode_data(rom, g.freqs)
    np.testing.assert_allclose(red.tangential_right(l), full.tangential_right(l), atol=1e-7)
    full, red = bode_data(sys, f.freqs), bode_data(rom, f.freqs)
    np.testing.assert_allclose(red.tangential_left(r), full.tangential_left(r), atol=1e-7)


def test_bode_matches_transfer_eval():
    sys = random_stable_system(5, 2, 1, seed=3)
    bd = bode_data(sys, [0.5, 4.0])
    np.testing.assert_allclose(bd.response[1], transfer_eval(sys, 4.0j))


# ----------------------------------------------------- normalised_error

def test_normalised_error_examples():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert normalised_error(x, x) == 0.0
    assert normalised_error(np.zeros_like(x), x) == pytest.approx(1.0)
    # induced 2-norm, not Frobenius
    assert normalised_error(np.diag([1.0, 1.0]), np.diag([2.0, 1.0])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        normalised_error(x, np.zeros_like(x))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3.0, 3.0).filter(lambda a: abs(a) > 1e-3))
def test_normalised_error_is_scale_invariant(seed, a):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    assert normalised_error(a * x, a * y) == pytest.approx(normalised_error(x, y), rel=1e-12)
