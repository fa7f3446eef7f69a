"""Verification suites: the oracle cross-checks behind `bethexx verify`.

Each suite returns {"checks": [...]} where every check carries its value,
tolerance and a pass flag; suites are deterministic for a fixed seed.
"""

from itertools import combinations

import numpy as np

from . import dets, ed, solve, thermo
from .core import BetheState, bethe_residuals, state_energy


def _check(name, value, tol, **extra):
    out = {"name": name, "value": float(value), "tolerance": float(tol),
           "passed": bool(value <= tol)}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# state enumeration helpers (shared with the acceptance tests)
# ---------------------------------------------------------------------------

def enumerate_real_states(M, max_states=None):
    """All distinct real-root on-shell states in every S^z >= 0 sector.

    Enumerates every admissible quantum-number pattern for all root counts
    N <= M/2 and keeps the Newton-converged, deduplicated solutions.
    """
    states = []
    seen = []
    for N in range(0, M // 2 + 1):
        if N == 0:
            states.append(BetheState(M, [], on_shell=True, max_residual=0.0))
            continue
        grid = solve.real_slots(M, N, 0)
        for pattern in combinations(grid, N):
            try:
                st = solve.solve_real_sector_state(M, np.array(pattern))
            except Exception:
                continue
            if st.max_residual > 1e-10:
                continue
            key = np.sort(st.roots.real)
            if any(len(key) == len(s) and np.allclose(key, s, atol=1e-8)
                   for s in seen):
                continue
            seen.append(key)
            states.append(st)
            if max_states and len(states) >= max_states:
                return states
    return states


def sample_two_string_states(M, limit=2):
    """A few solvable one-string (n2s = 1) triplet states at chain length M."""
    n_r = M // 2 - 3
    grid = solve.real_slots(M, n_r, 1)
    patterns = [
        [grid[-1], grid[-2], grid[-3], grid[len(grid) // 2 - 1]],
        [grid[-1], grid[-2], grid[1], grid[0]],
    ]
    out = []
    for pat in patterns[:limit]:
        try:
            out.append(solve.solve_close_pair_state(M, pat, n2s=1))
        except Exception:
            continue
    return out


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def suite_ed(seed=0, threads=1, sizes=(4, 6), rel_tol=1e-8):
    """Determinant representations vs brute-force inner products."""
    rng = np.random.default_rng(seed)
    checks = []
    for M in sizes:
        worst_norm = worst_slavnov = worst_fw = 0.0
        for st in enumerate_real_states(M):
            if st.n_roots == 0:
                continue
            v = ed.build_bethe_vector(st)
            norm_det = dets.gaudin_norm(st).value()
            norm_ed = ed.dual_contract(st.roots, v)
            worst_norm = max(worst_norm,
                             abs(norm_det - norm_ed) / abs(norm_ed))
            probes = rng.normal(size=st.n_roots) \
                + 1j * 0.2 * rng.normal(size=st.n_roots)
            sp = dets.scalar_product(st, probes).value()
            sp_ed = ed.dual_contract(
                st.roots, ed.bethe_vector_from_roots(M, probes))
            worst_slavnov = max(worst_slavnov, abs(sp - sp_ed) / abs(sp_ed))
            if st.sz_sector >= 1:
                probes = rng.normal(size=st.n_roots + 1) \
                    + 1j * 0.2 * rng.normal(size=st.n_roots + 1)
                fw = dets.descendant_scalar_product(st, probes, 1).value()
                w = ed.apply_s_plus(ed.bethe_vector_from_roots(M, probes))
                fw_ed = ed.dual_contract(st.roots, w)
                worst_fw = max(worst_fw, abs(fw - fw_ed) / abs(fw_ed))
        checks.append(_check("norm_vs_ed_M%d" % M, worst_norm, rel_tol))
        checks.append(_check("slavnov_vs_ed_M%d" % M, worst_slavnov, rel_tol))
        checks.append(_check("foda_wheeler_l1_vs_ed_M%d" % M, worst_fw, rel_tol))
    # one two-hole form factor at M = 8
    gs = solve.solve_ground_state(8)
    st, cls = solve.solve_hole_excitation(8, [2.0, 1.0])
    res = dets.finite_form_factor(gs, st, cls)
    vg = ed.build_bethe_vector(gs)
    ve = ed.apply_s_minus(ed.build_bethe_vector(st))
    ff_ed = ed.direct_form_factor_squared(vg, ve)
    checks.append(_check("two_hole_ff_vs_ed_M8",
                         abs(res.value - ff_ed) / ff_ed, rel_tol))
    return {"checks": checks}


def suite_densities(seed=0, threads=1, samples=25, tol=1e-8):
    """Every density branch inserted into its defining equation."""
    rng = np.random.default_rng(seed)
    checks = []
    for a in (0.5, 1.0):
        for branch, im_range in (("inside", (-0.75 * a, 0.75 * a)),
                                 ("outside_up", (a + 0.15, a + 1.0)),
                                 ("outside_dn", (-a - 1.0, -a - 0.15))):
            worst = 0.0
            for _ in range(samples):
                lam = rng.uniform(-2.0, 2.0)
                mu = rng.uniform(-2.0, 2.0) + 1j * rng.uniform(*im_range)
                worst = max(worst, abs(
                    thermo.density_equation_residual(a, lam, mu)))
            checks.append(_check("gen_lieb_a%.1f_%s" % (a, branch), worst, tol))
    # the symmetrized inside a=1 form is forced: the doubled-digamma variant
    # misses the equation at O(1)
    lam, mu = 0.4, 0.25 + 0.3j
    bad = thermo.density_inside_printed_variant(lam, mu)
    good = thermo.density(1.0, lam, mu)
    conv = thermo.quadrature.integrate_adaptive(
        lambda nu: thermo.kernel(lam - nu, 1.0)
        * thermo.density_inside_printed_variant(nu, mu))
    bad_res = abs(bad + conv - thermo.kernel(lam - mu, 1.0))
    checks.append(_check("symmetrization_needed(bad residual, passes if > 1e-3)",
                         1e-3 / max(bad_res, 1e-30), 1.0,
                         bad_residual=float(bad_res)))
    checks.append(_check("rho_h_evenness",
                         abs(thermo.hole_density(0.7)
                             - thermo.hole_density(-0.7)), 1e-12))
    return {"checks": checks}


def suite_convolutions(seed=0, threads=1, n_draws=10, tol=1e-8):
    worst = thermo.convolution_table_check(n_draws=n_draws, seed=seed)
    return {"checks": [_check("conv_%s" % k, v, tol)
                       for k, v in sorted(worst.items())]}


def suite_hlbe(seed=0, threads=1, holes=(0.4, 1.1, -0.4, -1.1), tol=1e-3):
    """Higher-level root vs extrapolated condensed string centers.

    The center approaches the higher-level root with an O(M*delta) =
    O(M^(-infinity)) gap, so the extrapolation over M = 24, 32, 48 runs in
    the measured small parameter x = M*delta(M) (a polynomial tail in 1/M
    does not exist to extrapolate).
    """
    holes = np.asarray(holes, dtype=float)
    branches = solve.higher_level_roots(holes, 1)
    real_pos = [b[0].real for b in branches
                if abs(b[0].imag) < 1e-10 and b[0].real > 0.1]
    mu = max(real_pos)
    data = []
    for M in (24, 32, 48):
        c, d, r = thermo.string_center_condensed(M, holes, c0=mu)
        data.append((M, c, d, r))
    x = np.array([M * d for (M, c, d, r) in data])
    cs = np.array([c for (M, c, d, r) in data])
    coef = np.linalg.solve(np.vander(x, 3, increasing=True), cs)
    c_extrap = coef[0]
    checks = [
        _check("center_extrapolation_vs_hlbe", abs(c_extrap - mu), tol,
               mu=mu, centers=[list(map(float, (M, c, d))) for (M, c, d, r) in data]),
        _check("gap_decreases",
               0.0 if (abs(cs[0] - mu) > abs(cs[1] - mu) > abs(cs[2] - mu))
               else 1.0, 0.5),
    ]
    hls = thermo.HigherLevelSystem(holes, np.array([mu], dtype=complex))
    checks.append(_check("hl_gaudin_extraction_residual", hls.residual(), 1e-12))
    res = np.max(np.abs(solve.higher_level_residuals(holes, [mu])))
    checks.append(_check("hlbe_residual", res, 1e-12))
    return {"checks": checks}


def suite_cauchy(seed=0, threads=1, sizes=(16, 24, 32), bulk=0.6):
    """Closed-form perturbed-Cauchy matrices vs direct extraction.

    Determinants are compared per matrix dimension (|log ratio| / dim, the
    natural per-root measure for exponentially scaled determinants);
    entrywise agreement is asserted over the bulk block, where the
    finite-size corrections scale as 1/M^2 -- tail entries of the
    asymptotic representation carry O(1) relative corrections at any
    finite M because the local level spacing there is not small.
    """
    checks = []
    dev_g, dev_e = [], []
    for M in sizes:
        gs = solve.solve_ground_state(M)
        grid = solve.real_slots(M, M // 2 - 1, 0)
        holes = [grid[len(grid) // 2], grid[len(grid) // 2 + 1]]
        st, cls = solve.solve_hole_excitation(M, holes)
        hls = thermo.HigherLevelSystem(cls.holes, np.array([], dtype=complex))

        probes_g = np.concatenate([st.roots, [0.5j]])
        m_g = dets.slavnov_matrix(gs, probes_g)
        g_g = dets.gaudin_matrix(gs)
        f_dir = dets.gaudin_extract(g_g, m_g)
        f_clo = thermo.build_f_ground(gs, st, cls)
        n = f_dir.shape[0]
        ratio = dets.logdet(f_clo) / dets.logdet(f_dir)
        dev = np.hypot(ratio.logmag, np.angle(ratio.phase)) / n
        dev_g.append(dev)

        mask_r = np.abs(gs.roots.real) < bulk
        mask_c = np.abs(probes_g.real) < bulk
        mask_c[-1] = True      # the i/2 column is bulk by construction
        blk = np.ix_(np.where(mask_r)[0], np.where(mask_c)[0])
        ent = np.max(np.abs(f_clo[blk] - f_dir[blk]))
        if M == 32:
            checks.append(_check("cauchy_block_bulk_entrywise_M32", ent, 1e-3))

        lam_check = np.concatenate([gs.roots, [0.5j]])
        m_e = dets.foda_wheeler_matrix(st, lam_check, ell=2)
        g_e = dets.gaudin_matrix(st)
        ne = st.n_roots
        f_e_dir = np.array(m_e, copy=True)
        f_e_dir[:, :ne] = dets.gaudin_extract(g_e.T, m_e[:, :ne].T).T
        f_e_clo, _ = thermo.build_f_excited(gs, st, cls, hls)
        ratio_e = dets.logdet(f_e_clo) / dets.logdet(f_e_dir)
        dev_e.append(np.hypot(ratio_e.logmag, np.angle(ratio_e.phase))
                     / f_e_dir.shape[0])
    mono_g = all(a > b for a, b in zip(dev_g, dev_g[1:]))
    mono_e = all(a > b for a, b in zip(dev_e, dev_e[1:]))
    checks.append(_check("ground_det_deviation_M%d" % sizes[-1], dev_g[-1],
                         1e-2, sequence=list(map(float, dev_g))))
    checks.append(_check("excited_det_deviation_M%d" % sizes[-1], dev_e[-1],
                         1e-2, sequence=list(map(float, dev_e))))
    checks.append(_check("deviations_monotone",
                         0.0 if (mono_g and mono_e) else 1.0, 0.5))
    return {"checks": checks}
