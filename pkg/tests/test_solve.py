"""Solvers: ground state, holes, 2-strings, higher-level system,
classification."""

import os

import numpy as np
import pytest

from bethexx import ed, solve
from bethexx.core import BetheState, ClosePair, bethe_residuals, state_energy
from bethexx.errors import (
    AmbiguousBoundary, DeviationUnderflow, NonConvergence,
    QuantumNumberCollision, UnpairedComplexRoot,
)


def test_ground_state_m2_root_is_zero():
    gs = solve.solve_ground_state(2)
    assert abs(gs.roots[0]) < 1e-13


def test_ground_state_m4_closed_form():
    gs = solve.solve_ground_state(4)
    ref = 1.0 / (2.0 * np.sqrt(3.0))
    assert np.allclose(np.sort(gs.roots.real), [-ref, ref], atol=1e-13)


def test_ground_state_matches_ed(gs8):
    vals, _ = ed.sector_eigensystem(8, 4)
    assert abs(state_energy(gs8) - vals[0]) < 1e-10


def test_ground_state_density_profile():
    """Roots follow the asymptotic quantile curve to O(1/M)."""
    M = 256
    gs = solve.solve_ground_state(M)
    numbers = solve.ground_state_numbers(M)
    ref = np.arcsinh(np.tan(2 * np.pi * numbers / M)) / np.pi
    assert np.max(np.abs(np.sort(gs.roots.real) - ref)) < 5.0 / M


def test_hole_excitation_basics(two_hole8):
    st, cls = two_hole8
    assert st.max_residual < 1e-12
    assert cls.n_h == 2 and cls.spin == 1 and cls.n_tilde == 0
    ve = ed.build_bethe_vector(st)
    vals, vecs = ed.sector_eigensystem(8, 3)
    _, ov = ed.match_eigenspace(ve, vals, vecs)
    assert ov >= 1.0 - 1e-8


def test_zero_holes_is_ground_state(gs8):
    st, cls = solve.solve_hole_excitation(8, [])
    assert np.allclose(st.roots, gs8.roots, atol=1e-12)
    assert cls.n_h == 0


def test_hole_energy_against_dispersion():
    """dE vs the spinon dispersion at M = 64, within 5/M."""
    from bethexx.core import spinon_energy_momentum, PAULI_ENERGY_SCALE
    M = 64
    gs = solve.solve_ground_state(M)
    st, cls = solve.solve_hole_excitation(M, [4.0, 2.0])
    de_form, _ = spinon_energy_momentum(cls.holes)
    gap = (state_energy(st) - state_energy(gs)) / PAULI_ENERGY_SCALE
    assert abs(gap - de_form) < 5.0 / M


def test_quantum_number_errors():
    with pytest.raises(QuantumNumberCollision):
        solve.solve_hole_excitation(8, [2.0, 2.0])
    with pytest.raises(QuantumNumberCollision):
        solve.solve_hole_excitation(8, [7.0, 1.0])
    with pytest.raises(QuantumNumberCollision):
        solve.solve_hole_excitation(8, [1.0])           # odd count


def test_close_pair_state_onshell(string12):
    st, cls = string12
    assert st.max_residual < 1e-12
    assert cls.n_2s == 1 and cls.n_h == 4 and cls.spin == 1
    assert cls.n_tilde == cls.n_2s + 2 * cls.n_q + 2 * cls.n_w
    ve = ed.build_bethe_vector(st)
    vals, vecs = ed.sector_eigensystem(12, 5)
    _, ov = ed.match_eigenspace(ve, vals, vecs)
    assert ov >= 1.0 - 1e-8


def test_close_pair_deviation_decay():
    """log|delta| decreases along M for a fixed slot pattern, roughly
    linearly (within 20 percent of the least-squares line)."""
    slots = [2.0, 4.0, -2.0, -4.0]
    Ms, logd = [], []
    for M in (16, 24, 32):
        st, cls = solve.solve_close_pair_state(M, slots, n2s=1,
                                               center_seeds=[0.95])
        Ms.append(M)
        logd.append(np.log(abs(complex(st.pairs[0].delta))))
    assert logd[0] > logd[1] > logd[2]
    coef = np.polyfit(Ms, logd, 1)
    assert coef[0] < 0
    fit = np.polyval(coef, Ms)
    assert np.max(np.abs(fit - logd)) < 0.2 * (max(logd) - min(logd))


def test_center_matches_higher_level_root():
    """Condensed-sea string center vs the higher-level prediction."""
    from bethexx import thermo
    holes = [0.4, 1.1, -0.4, -1.1]
    branches = solve.higher_level_roots(holes, 1)
    mu = max(b[0].real for b in branches if abs(b[0].imag) < 1e-10)
    data = []
    for M in (32, 48, 64):
        c, d, _ = thermo.string_center_condensed(M, holes, c0=mu)
        data.append((M, c, d))
    x = np.array([M * d for (M, c, d) in data])
    cs = np.array([c for (M, c, d) in data])
    c_extrap = np.linalg.solve(np.vander(x, 3, increasing=True), cs)[0]
    assert abs(c_extrap - mu) < 1e-3
    gaps = [abs(c - mu) for (M, c, d) in data]
    assert gaps[0] > gaps[1] > gaps[2]


def test_full_chain_center_approaches_higher_level():
    """|c(M) - mu(theta(M))| decreases with M (bulk pattern)."""
    slots = [4.0, 2.0, -1.0, -3.0]
    gaps = []
    for M in (24, 48):
        st, cls = solve.solve_close_pair_state(M, slots, n2s=1)
        c = st.pairs[0].center.real
        brs = solve.higher_level_roots(cls.holes, 1)
        mu = sorted((complex(b[0]) for b in brs), key=lambda m: abs(m - c))[0]
        gaps.append(abs(mu - c))
    assert gaps[1] < 0.7 * gaps[0]


def test_deviation_freeze_and_underflow():
    slots = [4.0, 6.0, -4.0, -6.0]
    st, cls = solve.solve_close_pair_state(64, slots, n2s=1,
                                           center_seeds=[0.97])
    assert st.frozen_deviation and st.pairs[0].delta == 0
    assert np.max(np.abs(bethe_residuals(st))) < 1e-9
    # with the freeze lifted, the deviation underflows 1e-13 by M = 72
    if os.environ.get("BETHEXX_PRECISION", "double") == "double":
        with pytest.raises(DeviationUnderflow):
            solve.solve_close_pair_state(72, slots, n2s=1,
                                         center_seeds=[0.97], freeze_m=128)
    os.environ["BETHEXX_PRECISION"] = "extended"
    try:
        st2, _ = solve.solve_close_pair_state(72, slots, n2s=1,
                                              center_seeds=[0.97], freeze_m=128)
        d = complex(st2.pairs[0].delta)
        assert 0 < abs(d) < 1e-13
        assert np.max(np.abs(bethe_residuals(st2))) < 1e-9
    finally:
        os.environ["BETHEXX_PRECISION"] = "double"


def test_extended_refinement_agrees_with_double():
    st, cls = solve.solve_close_pair_state(24, [4.0, 6.0, -4.0, -6.0],
                                           n2s=1, center_seeds=[0.97])
    p = st.pairs[0]
    reals = [r.real for r in st.roots if abs(r.imag) < 1e-9]
    d_mp = solve.refine_delta_extended(24, reals, [(p.center.real, p.delta.real)],
                                       p.center.real, p.delta.real)
    assert abs(complex(d_mp) - p.delta) < 1e-10 * abs(p.delta)


def test_higher_level_two_holes():
    # n_h = 2, n~ = 1: the root is exactly the hole midpoint
    for (t1, t2) in ((0.3, 0.9), (-0.7, 0.2)):
        brs = solve.higher_level_roots([t1, t2], 1)
        assert len(brs) == 1
        assert abs(brs[0][0] - 0.5 * (t1 + t2)) < 1e-12
    # symmetric holes: the root is at the origin (purely imaginary limit)
    brs = solve.higher_level_roots([0.8, -0.8], 1)
    assert abs(brs[0][0]) < 1e-12
    # n_h = 2, n~ = 0: empty set
    assert solve.higher_level_roots([0.3, -0.4], 0)[0].size == 0


def test_higher_level_residuals_and_selfconjugacy():
    holes = [0.4, 1.1, -0.4, -1.1]
    brs = solve.higher_level_roots(holes, 1)
    assert len(brs) == 3      # 0 and +-0.967 for this symmetric pattern
    for b in brs:
        assert np.max(np.abs(solve.higher_level_residuals(holes, b))) < 1e-12
        assert solve._is_self_conjugate_set(b)


def test_higher_level_two_roots():
    holes = [0.2, 0.9, -0.5, -1.3]
    brs = solve.higher_level_roots(holes, 2)
    for b in brs:
        assert len(b) == 2
        assert np.max(np.abs(solve.higher_level_residuals(holes, b))) < 1e-11


def test_classify_ground_state(gs8):
    cls = solve.classify(gs8)
    assert cls.n_r == 4 and cls.n_2s == cls.n_q == cls.n_w == cls.n_h == 0


def test_classify_two_string(string12):
    st, cls_solver = string12
    cls = solve.classify(st)
    assert cls.n_2s == 1 and cls.n_h == 4
    c, d = cls.close_pairs[0]
    assert abs(c - st.pairs[0].center) < 1e-10
    assert abs(d - st.pairs[0].delta) < 1e-10
    assert np.allclose(cls.holes, cls_solver.holes, atol=1e-8)
    # members reconstruct as c +- i(1/2 + delta)
    assert abs((c + 1j * (0.5 + d)) - st.pairs[0].lam_plus) < 1e-12


def test_classify_synthetic_wide_pair():
    # wide pair: center Im beyond 1/2, i.e. member Im beyond 1
    w = 0.3 + 1.4j
    st = BetheState(12, [0.1, -0.2, w, np.conj(w)], on_shell=True,
                    max_residual=0.0)
    cls = solve.classify(st)
    assert cls.n_w == 1 and cls.n_2s == 0
    assert cls.n_tilde == 2
    got = np.sort_complex(cls.higher_roots)
    ref = np.sort_complex(np.array([w - 0.5j, np.conj(w) + 0.5j]))
    assert np.allclose(got, ref)


def test_classify_synthetic_quartet():
    c = 0.4 + 0.2j
    d = 1e-3 + 5e-4j
    roots = [c + 1j * (0.5 + d), np.conj(c + 1j * (0.5 + d)),
             c - 1j * (0.5 + d), np.conj(c - 1j * (0.5 + d)), 0.15, -0.05]
    st = BetheState(16, roots, on_shell=True, max_residual=0.0)
    cls = solve.classify(st)
    assert cls.n_q == 1 and cls.n_2s == 0
    assert cls.n_tilde == 2


def test_classify_errors():
    st = BetheState(8, [0.1, 0.3 + 0.2j], on_shell=True, max_residual=0.0)
    with pytest.raises(UnpairedComplexRoot):
        solve.classify(st)
    # pair center on the close/wide dividing line |Im center| = 1/2
    st = BetheState(8, [0.3 + (1.0 + 1e-8) * 1j, 0.3 - (1.0 + 1e-8) * 1j],
                    on_shell=True, max_residual=0.0)
    with pytest.raises(AmbiguousBoundary):
        solve.classify(st)


def test_counting_identity_for_solver_outputs(two_hole8, string12):
    for (st, cls) in (two_hole8, string12):
        assert cls.n_tilde == cls.n_2s + 2 * cls.n_q + 2 * cls.n_w
        assert cls.n_h % 2 == 0
        assert cls.spin == st.sz_sector
