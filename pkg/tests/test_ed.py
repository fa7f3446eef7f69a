"""Brute-force engine: Hamiltonian blocks, monodromy entries, Bethe
vectors, symmetry generators, direct form factors."""

import numpy as np
import pytest

from bethexx import ed, solve
from bethexx.core import BetheState, state_energy, transfer_eigenvalue
from bethexx.errors import SectorMismatch, SizeLimitExceeded


def test_hamiltonian_m2_singlet():
    vals, _ = ed.sector_eigensystem(2, 1)
    assert abs(vals[0] + 8.0) < 1e-12


def test_hamiltonian_ferromagnetic_zero():
    for M in (4, 8):
        H = ed.hamiltonian_sector(M, 0)
        assert abs(H.toarray()[0, 0]) < 1e-14


def test_hamiltonian_size_limit():
    with pytest.raises(SizeLimitExceeded):
        ed.hamiltonian_sector(18, 2)
    with pytest.raises(SizeLimitExceeded):
        ed.sector_eigensystem(16, 2)


def test_sector_basis():
    sec = ed.SectorBasis(6, 2)
    assert sec.dimension == 15
    assert np.all(np.diff(sec.basis) > 0)    # canonical ascending order


def test_vacuum_relations():
    M = 6
    vac = ed.StateVector(ed.SectorBasis(M, 0), [1.0])
    lam = 0.31 - 0.12j
    Av = ed.apply_monodromy_entry("A", lam, vac)
    assert abs(Av.amplitudes[0] - 1.0) < 1e-13
    Dv = ed.apply_monodromy_entry("D", lam, vac)
    d = ((lam - 0.5j) / (lam + 0.5j)) ** M
    assert abs(Dv.amplitudes[0] - d) < 1e-13
    Cv = ed.apply_monodromy_entry("C", lam, vac)
    assert Cv.norm() < 1e-14


def test_b_operators_commute(rng):
    M = 6
    sec = ed.SectorBasis(M, 2)
    v = ed.StateVector(sec, rng.normal(size=sec.dimension)
                       + 1j * rng.normal(size=sec.dimension))
    lam, mu = 0.4 + 0.1j, -0.2 + 0.3j
    ab = ed.apply_monodromy_entry("B", lam, ed.apply_monodromy_entry("B", mu, v))
    ba = ed.apply_monodromy_entry("B", mu, ed.apply_monodromy_entry("B", lam, v))
    assert np.max(np.abs(ab.amplitudes - ba.amplitudes)) < 1e-12 * ab.norm()


def test_bethe_vector_eigenstate(gs8):
    v = ed.build_bethe_vector(gs8)
    assert v.sector.n_down == gs8.n_roots
    assert ed.eigen_residual(v, state_energy(gs8)) < 1e-9


def test_vacuum_bethe_vector():
    v = ed.build_bethe_vector(BetheState(4, []))
    assert v.sector.n_down == 0 and abs(v.amplitudes[0] - 1.0) < 1e-15


def test_offshell_overlap_is_slavnov(gs8, rng):
    from bethexx import dets
    probes = rng.normal(size=4) + 1j * 0.2 * rng.normal(size=4)
    w = ed.bethe_vector_from_roots(8, probes)
    sp_ed = ed.dual_contract(gs8.roots, w)
    sp = dets.scalar_product(gs8, probes).value()
    assert abs(sp - sp_ed) < 1e-9 * abs(sp_ed)


def test_s_plus_annihilates_on_shell(gs8, two_hole8, string12):
    for st in (gs8, two_hole8[0], string12[0]):
        v = ed.build_bethe_vector(st)
        assert ed.apply_s_plus(v).norm() / v.norm() < 1e-9


def test_multiplet_norm_relation(two_hole8):
    # |S_- Psi_0|^2 = 2 |Psi_0|^2 for triplet highest-weight states
    v0 = ed.build_bethe_vector(two_hole8[0])
    v1 = ed.apply_s_minus(v0)
    assert abs(v1.norm() ** 2 - 2.0 * v0.norm() ** 2) < 1e-10 * v0.norm() ** 2


def test_distinct_states_orthogonal():
    a = solve.solve_hole_excitation(8, [2.0, 1.0])[0]
    b = solve.solve_hole_excitation(8, [2.0, 0.0])[0]
    va, vb = ed.build_bethe_vector(a), ed.build_bethe_vector(b)
    assert abs(va.dot(vb)) < 1e-9 * va.norm() * vb.norm()


def test_su2_identity_sigma_z_vs_sigma_plus(gs8, two_hole8):
    # <Psi_1| s^z_m |Psi_g> = -2 <Psi_0| s^+_m |Psi_g>, triplet Psi_0
    v0 = ed.build_bethe_vector(two_hole8[0])
    v1 = ed.apply_s_minus(v0)
    vg = ed.build_bethe_vector(gs8)
    for site in (1, 3):
        lhs = v1.dot(ed.apply_sigma_z(site, vg))
        rhs = -2.0 * v0.dot(ed.apply_sigma_plus(site, vg))
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_sector_mismatch():
    vg = ed.StateVector(ed.SectorBasis(4, 2), np.ones(6))
    ve = ed.StateVector(ed.SectorBasis(4, 0), [1.0])
    with pytest.raises(SectorMismatch):
        ed.direct_form_factor(vg, ve, 1, "+")


def test_transfer_matrix_vs_formula(gs8, rng):
    v = ed.build_bethe_vector(gs8)
    for mu in (0.37 + 0.21j, 0.5j, -0.9 - 0.4j):
        tv = ed.transfer_apply(mu, v)
        k = int(np.argmax(np.abs(v.amplitudes)))
        ratio = tv.amplitudes[k] / v.amplitudes[k]
        tau = transfer_eigenvalue(gs8, mu)
        assert abs(ratio - tau) < 1e-9 * abs(tau)


def test_translation_matches_momentum(gs8, two_hole8):
    for st in (gs8, two_hole8[0]):
        v = ed.build_bethe_vector(st)
        tv = ed.translation_apply(v)
        k = int(np.argmax(np.abs(v.amplitudes)))
        phase = tv.amplitudes[k] / v.amplitudes[k]
        from bethexx.core import momentum_phase
        assert abs(phase - np.exp(1j * momentum_phase(st))) < 1e-9


def test_c_product_norm_sign(gs8, two_hole8):
    # <0|prod C prod B|0> = (-1)^N ||v||^2 for self-conjugate root sets
    for st in (gs8, two_hole8[0]):
        v = ed.build_bethe_vector(st)
        cb = ed.dual_contract(st.roots, v)
        assert abs(cb - (-1.0) ** st.n_roots * v.norm() ** 2) < 1e-9 * v.norm() ** 2


def test_transfer_matrices_commute(rng):
    M = 6
    sec = ed.SectorBasis(M, 3)
    v = ed.StateVector(sec, rng.normal(size=sec.dimension)
                       + 1j * rng.normal(size=sec.dimension))
    lam, mu = 0.4 - 0.2j, -0.7 + 0.5j
    ab = ed.transfer_apply(lam, ed.transfer_apply(mu, v))
    ba = ed.transfer_apply(mu, ed.transfer_apply(lam, v))
    assert np.max(np.abs(ab.amplitudes - ba.amplitudes)) < 1e-11 * ab.norm()


def test_direct_form_factor_hermitian_symmetry(gs8, two_hole8):
    vg = ed.build_bethe_vector(gs8)
    v1 = ed.apply_s_minus(ed.build_bethe_vector(two_hole8[0]))
    f1 = ed.direct_form_factor(vg, v1, 2, "z")
    f2 = ed.direct_form_factor(v1, vg, 2, "z")
    assert abs(f1 - np.conj(f2)) < 1e-12
