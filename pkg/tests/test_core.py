"""Scalar functions: kernels, Baxter polynomial, counting function,
transfer eigenvalue, spinon kinematics."""

import numpy as np
import pytest
from scipy.integrate import quad

from bethexx import core
from bethexx.core import (
    BetheState, baxter_q, bethe_residuals, counting_function, kernel,
    momentum_phase, spinon_energy_momentum, state_energy, t_kernel,
    transfer_eigenvalue, wrap_angle,
)
from bethexx.errors import OddHoleCount, PoleAtArgument

M4_ROOT = 1.0 / (2.0 * np.sqrt(3.0))     # M = 4 ground state: +-1/(2 sqrt 3)


def test_kernel_even_and_normalized():
    for a in (0.5, 1.0, 1.5):
        x = np.linspace(-3, 3, 7)
        assert np.allclose(kernel(x, a), kernel(-x, a))
        val, _ = quad(lambda t: kernel(t, a), -np.inf, np.inf)
        assert abs(val - 1.0) < 1e-8
    assert np.all(kernel(np.linspace(-5, 5, 11), 0.5) > 0)


def test_t_kernel_identities(rng):
    # t(x) + t(-x) = 2 pi i K(x) and the close-pair reflection symmetry
    for _ in range(100):
        x = rng.normal() + 1j * rng.normal()
        lhs = t_kernel(x) + t_kernel(-x)
        rhs = 2j * np.pi * kernel(x, 1.0)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)
        c, lam = rng.normal() + 1j * rng.normal(), rng.normal() + 1j * rng.normal()
        a = t_kernel(c - 0.5j - lam)
        b = t_kernel(lam - c - 0.5j)
        assert abs(a - b) <= 1e-12 * abs(a)


def test_baxter_q_basics():
    empty = BetheState(4, [])
    assert baxter_q(empty, 0.3 + 0.1j) == 1.0
    pair = BetheState(4, [0.5, -0.5])
    assert abs(baxter_q(pair, 0.0) - (-0.25)) < 1e-15


def test_baxter_q_extended_precision_oracle(gs8):
    """Per-factor product recomputed at 2x precision (mpmath)."""
    import mpmath as mp
    lam = 1j
    mine = baxter_q(gs8, lam)
    with mp.workdps(32):
        ref = mp.mpf(1)
        for r in gs8.roots:
            ref *= (mp.mpc(lam) - mp.mpc(complex(r)))
        ref = complex(ref)
    assert abs(mine - ref) < 1e-14 * abs(ref)


def test_baxter_conjugation_symmetry(gs8, string12):
    for st in (gs8, string12[0]):
        for lam in (0.3 + 0.7j, -1.2 + 0.1j):
            assert abs(baxter_q(st, np.conj(lam))
                       - np.conj(baxter_q(st, lam))) < 1e-12


def test_counting_function_m2():
    # the only finite root of the M = 2 sector is lam = 0; the naive
    # quadratic solutions +-1/2 are off shell in the self-inclusive
    # convention (their counting-function value is +1, not -1)
    st = BetheState(2, [0.0], on_shell=True)
    assert abs(counting_function(st, 0.0) + 1.0) < 1e-12
    bad = BetheState(2, [0.5])
    assert abs(counting_function(bad, 0.5) - 1.0) < 1e-12


def test_counting_function_vanishes_at_i_half(gs8):
    assert abs(counting_function(gs8, 0.5j)) < 1e-300


def test_counting_function_pole():
    st = BetheState(4, [M4_ROOT, -M4_ROOT], on_shell=True)
    with pytest.raises(PoleAtArgument):
        counting_function(st, st.roots[0] + 1j)


def test_counting_function_wide_regime_limit():
    # beyond |Im z| > 1 the ground-state counting function tends to 1; the
    # approach is slow (edge-of-distribution corrections), so assert the
    # monotone limit rather than a small finite-M value
    from bethexx import solve as _solve
    z = 0.3 + 2.0j
    devs = []
    for M in (32, 64, 128, 256):
        gs = _solve.solve_ground_state(M)
        devs.append(abs(counting_function(gs, z) - 1.0))
    assert all(a > b for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.05
    # below the axis the conjugate statement holds for 1/a
    gs = _solve.solve_ground_state(128)
    assert abs(1.0 / counting_function(gs, np.conj(z)) - 1.0) < 0.05


def test_bethe_residuals_off_shell_matches_direct(rng):
    M = 6
    roots = rng.normal(size=3) + 1j * 0.1 * rng.normal(size=3)
    st = BetheState(M, roots)
    res = bethe_residuals(st)
    for j, lam in enumerate(roots):
        d = ((lam - 0.5j) / (lam + 0.5j)) ** M
        prod = np.prod((lam - roots + 1j) / (lam - roots - 1j))
        assert abs(res[j] - (d * prod + 1.0)) < 1e-10 * max(1.0, abs(res[j]))


def test_bethe_residuals_on_shell(gs8, two_hole8, string12):
    for st in (gs8, two_hole8[0], string12[0]):
        assert np.max(np.abs(bethe_residuals(st))) < 1e-12


def test_transfer_eigenvalue_vacuum():
    vac = BetheState(6, [], on_shell=True, max_residual=0.0)
    mu = 0.4 + 0.2j
    expected = 1.0 + ((mu - 0.5j) / (mu + 0.5j)) ** 6
    assert abs(transfer_eigenvalue(vac, mu) - expected) < 1e-14


def test_transfer_eigenvalue_pole_free_at_roots(gs8):
    # a pole would make the two-sided difference diverge like 1/eps; the
    # Bethe equations cancel it, so the difference shrinks linearly and
    # the two-sided mean agrees with the limit form to curvature accuracy
    lam1 = gs8.roots[0]
    c = transfer_eigenvalue(gs8, lam1)       # limit form
    d_prev = None
    for eps in (1e-4, 1e-5, 1e-6):
        a = transfer_eigenvalue(gs8, lam1 + eps)
        b = transfer_eigenvalue(gs8, lam1 - eps)
        d = abs(a - b)
        if d_prev is not None:
            assert d < 0.2 * d_prev
        d_prev = d
    eps = 1e-6
    a = transfer_eigenvalue(gs8, lam1 + eps)
    b = transfer_eigenvalue(gs8, lam1 - eps)
    assert abs(0.5 * (a + b) - c) < 1e-8


def test_energy_closed_form_m2_m4():
    # fixed by the exact diagonalizations: E(M=2, root 0) = -8 and
    # E(M=4, roots +-1/(2 sqrt 3)) = -12 pin -2/(lam^2 + 1/4) per root
    assert abs(state_energy(BetheState(2, [0.0], on_shell=True)) + 8.0) < 1e-12
    st4 = BetheState(4, [M4_ROOT, -M4_ROOT], on_shell=True)
    assert np.max(np.abs(bethe_residuals(st4))) < 1e-12
    assert abs(state_energy(st4) + 12.0) < 1e-12


def test_momentum_phase_m2():
    assert abs(momentum_phase(BetheState(2, [0.0], on_shell=True)) - np.pi) < 1e-12


def test_spinon_energy_momentum():
    de, dp = spinon_energy_momentum([0.0, 0.0])
    assert de == pytest.approx(np.pi, abs=1e-15)
    assert spinon_energy_momentum([]) == (0.0, 0.0)
    with pytest.raises(OddHoleCount):
        spinon_energy_momentum([0.1, 0.2, 0.3])
    de2, dp2 = spinon_energy_momentum([0.5, -0.5])
    assert -np.pi < dp2 <= np.pi


def test_wrap_angle():
    assert wrap_angle(3 * np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)
    assert wrap_angle(0.3) == pytest.approx(0.3)


def test_state_invariants(string12):
    st, _ = string12
    assert st.is_self_conjugate(1e-10)
    assert st.sz_sector == 1
    with pytest.raises(ValueError):
        BetheState(4, [0.1, 0.2, 0.3])      # N > M/2
    with pytest.raises(ValueError):
        BetheState(3, [0.1])                # odd M
