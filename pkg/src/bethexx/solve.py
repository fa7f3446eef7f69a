"""Root solvers and the real/close-pair/wide-pair classification.

Quantum-number bookkeeping (frozen convention)
----------------------------------------------
Real roots of a self-conjugate state (real roots {g} plus conjugate pairs
p_k +- i q_k) satisfy the logarithmic equations

    M phi(g_j; 1/2) - sum_k phi(g_j - g_k; 1) - sum_pairs P(g_j - p_k; q_k)
        = 2 pi I_j,                     phi(x; a) = 2 arctan(x / a),

    P(u; q) = (2 pi if q < 1 else 0) - 2 atan2(1-q, u) - 2 atan2(1+q, u),

with quantum numbers I_j on the symmetric grid of M - n_r - 2*(#close
pairs) numbers spaced by 1 (half-odd when the count is even; wide pairs,
q > 1, do not change the grid).  The ground state fills the full grid;
holes are the vacated grid values, located by inverting the counting
function z(theta) = I_vacant.

A 2-string c +- i(1/2 + delta) carries its own equation, written in the
cancellation-safe form (the pair factors 2i*delta etc. are divided out
symbolically before any numerics)

    log((1+delta)/delta) + M Log((c + i delta)/(c + i(1+delta)))
      + sum_{roots g not in pair} Log((lam_+ + i - g)/(lam_+ - i - g))
    = 2 pi i k_s,

where the integer k_s (the string's branch) is frozen from the initial
center seed.  delta is parametrized as sign * exp(u), so the solver keeps
full accuracy for deviations far below machine epsilon relative to the
roots; every deviation-sensitive quantity downstream is evaluated from the
exact (center, delta) pair data.
"""

import os

import numpy as np

from .core import BetheState, ClosePair, bethe_residuals, kernel
from .errors import (
    AmbiguousBoundary, DeviationUnderflow, NonConvergence,
    QuantumNumberCollision, UnpairedComplexRoot,
)

TWO_PI = 2.0 * np.pi

DEVIATION_FREEZE_M = 48        # above this, delta is set to exact zero
DEVIATION_UNDERFLOW = 1e-13    # below this (M <= freeze), extended retry


# ---------------------------------------------------------------------------
# quantum-number grids
# ---------------------------------------------------------------------------

def real_slots(M, n_r, n_close=0):
    """Admissible quantum numbers for the real roots: symmetric unit grid.

    ``n_close`` counts close pairs (quartets count twice); wide pairs do
    not consume slots.
    """
    count = M - n_r - 2 * n_close
    if count < n_r:
        raise QuantumNumberCollision("not enough slots for %d real roots" % n_r)
    return np.arange(count) - (count - 1) / 2.0


def ground_state_numbers(M):
    n = M // 2
    return np.arange(n) - (n - 1) / 2.0


def occupied_from_holes(M, n_r, n_close, hole_slots):
    """Grid minus the vacated values; validates membership and uniqueness."""
    grid = real_slots(M, n_r, n_close)
    hole_slots = np.asarray(hole_slots, dtype=float)
    if len(set(hole_slots.tolist())) != len(hole_slots):
        raise QuantumNumberCollision("duplicate hole quantum numbers")
    occ = list(grid)
    for h in hole_slots:
        hits = [i for i, g in enumerate(occ) if abs(g - h) < 1e-9]
        if not hits:
            raise QuantumNumberCollision("hole slot %s not in grid" % h)
        occ.pop(hits[0])
    return np.array(occ)


# ---------------------------------------------------------------------------
# counting function in the log form
# ---------------------------------------------------------------------------

def _phi(x, a):
    return 2.0 * np.arctan(x / a)


def _phi_prime(x, a):
    return TWO_PI * kernel(x, a)


def _pair_phase(u, q):
    """Scattering phase of a real rapidity off a conjugate pair p +- iq."""
    const = TWO_PI if q < 1.0 else 0.0
    return const - 2.0 * np.arctan2(1.0 - q, u) - 2.0 * np.arctan2(1.0 + q, u)


def _pair_phase_prime(u, q):
    return (2.0 * (1.0 - q) / (u * u + (1.0 - q) ** 2)
            + 2.0 * (1.0 + q) / (u * u + (1.0 + q) ** 2))


def counting_z(lam, reals, pairs, M):
    """z(lam) whose values at the real roots are their quantum numbers.

    ``pairs`` lists the upper members of conjugate pairs as (p, q) with
    q = Im > 0; 2-strings enter as (c, 1/2 + delta).
    """
    val = M * _phi(lam, 0.5)
    for g in reals:
        val -= _phi(lam - g, 1.0)
    for (p, q) in pairs:
        val -= _pair_phase(lam - p, q)
    return val / TWO_PI


def _counting_z_prime(lam, reals, pairs, M):
    val = M * _phi_prime(lam, 0.5)
    for g in reals:
        val -= _phi_prime(lam - g, 1.0)
    for (p, q) in pairs:
        val -= _pair_phase_prime(lam - p, q)
    return val / TWO_PI


def locate_hole(slot, reals, pairs, M):
    """Invert z(theta) = slot by bisection plus a Newton polish."""
    lo, hi = -1.0, 1.0
    while counting_z(lo, reals, pairs, M) > slot:
        lo *= 2.0
        if lo < -1e6:
            raise NonConvergence("hole location bracket failed")
    while counting_z(hi, reals, pairs, M) < slot:
        hi *= 2.0
        if hi > 1e6:
            raise NonConvergence("hole location bracket failed")
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if counting_z(mid, reals, pairs, M) < slot:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(mid)):
            break
    th = 0.5 * (lo + hi)
    for _ in range(8):
        th -= (counting_z(th, reals, pairs, M) - slot) / _counting_z_prime(
            th, reals, pairs, M)
    return th


# ---------------------------------------------------------------------------
# Newton machinery
# ---------------------------------------------------------------------------

def _seed_rapidity(M, I):
    x = 2.0 * I / M
    if abs(x) < 0.47:
        return np.arcsinh(np.tan(np.pi * x)) / np.pi
    ang = np.clip(np.pi * I / M, -np.pi / 2 + 0.06, np.pi / 2 - 0.06)
    return 0.5 * np.tan(ang)


def _strings_to_pairs(strings):
    return [(float(np.real(c)), float(0.5 + np.real(d))) for (c, d) in strings]


def _real_residual(lams, numbers, strings, M):
    F = M * _phi(lams, 0.5) - TWO_PI * numbers
    F -= np.sum(_phi(lams[:, None] - lams[None, :], 1.0), axis=1)
    for (p, q) in _strings_to_pairs(strings):
        F -= _pair_phase(lams - p, q)
    return F


def _real_jacobian(lams, strings, M):
    n = len(lams)
    diff = lams[:, None] - lams[None, :]
    off = _phi_prime(diff, 1.0)
    J = np.zeros((n, n))
    J += off                   # -phi(g_j - g_l): d/d g_l = +phi'
    d = M * _phi_prime(lams, 0.5) - np.sum(off, axis=1)
    for (p, q) in _strings_to_pairs(strings):
        d -= _pair_phase_prime(lams - p, q)
    J[np.diag_indices(n)] = d
    return J


def solve_real_roots(M, numbers, strings=(), seed=None, tol=1e-13, max_iter=80):
    """Damped Newton for the real-root subsystem at fixed string data.

    The equations carry an explicit factor M, so the convergence target is
    floored at the roundoff scale M*eps; a damping stall within 100x of
    that floor counts as converged (the phase residual maps one-to-one
    onto the Bethe-equation residual, which stays well under 1e-12).
    """
    numbers = np.asarray(numbers, dtype=float)
    lams = np.array([_seed_rapidity(M, I) for I in numbers]) if seed is None \
        else np.array(seed, dtype=float)
    tol_eff = max(tol, 30.0 * M * np.finfo(float).eps)
    F = _real_residual(lams, numbers, strings, M)
    for _ in range(max_iter):
        if np.max(np.abs(F)) < tol_eff:
            return lams
        step = np.linalg.solve(_real_jacobian(lams, strings, M), F)
        scale, nrm = 1.0, np.max(np.abs(F))
        for _ in range(20):
            trial = lams - scale * step
            Ft = _real_residual(trial, numbers, strings, M)
            if np.max(np.abs(Ft)) < nrm:
                lams, F = trial, Ft
                break
            scale *= 0.5
        else:
            if nrm < 100.0 * tol_eff:
                return lams
            raise NonConvergence("real-root damping stalled", residual=float(nrm))
    raise NonConvergence("real-root Newton did not converge",
                         residual=float(np.max(np.abs(F))))


def _string_equation(c, delta, reals, other_strings, M, branch):
    """Cancellation-safe log equation of one 2-string; zero on shell."""
    lam_p = c + 1j * (0.5 + delta)
    val = np.log1p(delta) - np.log(complex(delta))
    val += M * np.log((c + 1j * delta) / (c + 1j * (1.0 + delta)))
    for g in reals:
        val += np.log(lam_p + 1j - g) - np.log(lam_p - 1j - g)
    for (c2, d2) in other_strings:
        for mu in (c2 + 1j * (0.5 + d2), c2 - 1j * (0.5 + d2)):
            val += np.log(lam_p + 1j - mu) - np.log(lam_p - 1j - mu)
    return val - TWO_PI * 1j * branch


def _mixed_residual(x, meta):
    """Stacked residual of the coupled (real roots, 2-strings) system.

    Unknowns: n_r real roots, then per string (center, u = log|delta|).
    """
    M, numbers, n_str, sign = meta["M"], meta["numbers"], meta["n_str"], meta["sign"]
    n_r = len(numbers)
    reals = x[:n_r]
    strings = []
    for s in range(n_str):
        c = x[n_r + 2 * s]
        delta = sign[s] * np.exp(x[n_r + 2 * s + 1])
        strings.append((c, delta))
    F = list(_real_residual(reals, numbers, strings, M)) if n_r else []
    for s in range(n_str):
        c, d = strings[s]
        others = strings[:s] + strings[s + 1:]
        g = _string_equation(c, d, reals, others, M, meta["branch"][s])
        F.extend([g.real, g.imag])
    return np.array(F)


def _fd_jacobian(f, x, f0, h=1e-7):
    n = len(x)
    J = np.zeros((len(f0), n))
    for k in range(n):
        dx = h * max(1.0, abs(x[k]))
        xp = x.copy()
        xp[k] += dx
        J[:, k] = (f(xp) - f0) / dx
    return J


def _sign_patterns(n):
    out = []
    for bits in range(1 << n):
        out.append(tuple(1.0 if (bits >> k) & 1 == 0 else -1.0
                         for k in range(n)))
    return out or [()]


def _solve_mixed(M, numbers, reals0, centers0, signs, tol, max_iter):
    n_r, n_s = len(numbers), len(centers0)
    meta = {"M": M, "numbers": numbers, "n_str": n_s, "sign": signs,
            "branch": [0] * n_s}
    x = np.concatenate([reals0,
                        np.ravel([[c, np.log(1e-3)] for c in centers0])])
    for s in range(n_s):
        c = x[n_r + 2 * s]
        d = signs[s] * np.exp(x[n_r + 2 * s + 1])
        others = [(x[n_r + 2 * t], signs[t] * np.exp(x[n_r + 2 * t + 1]))
                  for t in range(n_s) if t != s]
        g = _string_equation(c, d, x[:n_r], others, M, 0)
        meta["branch"][s] = int(np.round(g.imag / TWO_PI))

    def resid(xv):
        return _mixed_residual(xv, meta)

    F = resid(x)
    for _ in range(max_iter):
        nrm = np.max(np.abs(F))
        if nrm < tol:
            strings = [(x[n_r + 2 * s], signs[s] * np.exp(x[n_r + 2 * s + 1]))
                       for s in range(n_s)]
            return {"reals": x[:n_r], "strings": strings, "resid": nrm}
        J = _fd_jacobian(resid, x, F)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence("singular Jacobian: %s" % exc, residual=float(nrm))
        scale = 1.0
        for _ in range(20):
            xt = x - scale * step
            Ft = resid(xt)
            if np.max(np.abs(Ft)) < nrm:
                x, F = xt, Ft
                break
            scale *= 0.5
        else:
            raise NonConvergence("mixed Newton damping stalled", residual=float(nrm))
    raise NonConvergence("mixed Newton did not converge",
                         residual=float(np.max(np.abs(F))))


def refine_delta_extended(M, reals, strings, c, delta0, dps=40, itmax=60):
    """Fixed-point refinement of one string deviation with mpmath.

    Iterates delta = (1+delta) d(lam_+) prod_{g not in pair}
    (lam_+ + i - g)/(lam_+ - i - g) at ``dps`` significant digits, holding
    the real roots and other strings at their double-precision values.
    """
    import mpmath as mp

    with mp.workdps(dps):
        d = mp.mpc(complex(delta0))
        cc = mp.mpf(float(np.real(c)))
        for _ in range(itmax):
            lam_p = cc + 1j * (mp.mpf("0.5") + d)
            acc = mp.power((cc + 1j * d) / (cc + 1j * (1 + d)), M) * (1 + d)
            for g in reals:
                gg = mp.mpf(float(g))
                acc *= (lam_p + 1j - gg) / (lam_p - 1j - gg)
            for (c2, d2) in strings:
                if abs(complex(c2) - complex(c)) < 1e-12:
                    continue
                for mu in (c2 + 1j * (0.5 + d2), c2 - 1j * (0.5 + d2)):
                    acc *= (lam_p + 1j - mu) / (lam_p - 1j - mu)
            if mp.almosteq(acc, d, rel_eps=mp.mpf(10) ** (5 - dps)):
                d = acc
                break
            d = acc
        out = complex(d)
    return out.real if out.imag == 0 else out


# ---------------------------------------------------------------------------
# public solver entry points
# ---------------------------------------------------------------------------

def solve_ground_state(M, tol=1e-13):
    """M/2 real roots with consecutive quantum numbers; residual <= 1e-12.

    Beyond M = 256 the Newton seed comes from a chain of doubled solves:
    the counting function of the half-size solution is rescaled and
    inverted, which keeps the edge roots inside the Newton basin up to the
    largest supported lengths.
    """
    if M % 2 or M < 2:
        raise ValueError("M must be even and >= 2")
    numbers = ground_state_numbers(M)
    seed = None
    if M > 256:
        m2 = 2 * ((M // 2 + 1) // 2)        # even half size
        prev = solve_ground_state(m2, tol=tol)
        reals = prev.roots.real
        seed = np.array([locate_hole(I * m2 / M, reals, [], m2)
                         for I in numbers])
    lams = solve_real_roots(M, numbers, seed=seed, tol=tol)
    state = BetheState(M, np.sort(lams).astype(complex), on_shell=True)
    state.max_residual = float(np.max(np.abs(bethe_residuals(state))))
    state.tol = tol
    return state


def solve_hole_excitation(M, hole_slots, tol=1e-13):
    """Real-root excitation with the given vacated quantum numbers."""
    hole_slots = np.asarray(hole_slots, dtype=float)
    if len(hole_slots) % 2:
        raise QuantumNumberCollision("hole count must be even")
    n_r = M // 2 - len(hole_slots) // 2
    numbers = occupied_from_holes(M, n_r, 0, hole_slots)
    lams = solve_real_roots(M, numbers, tol=tol)
    state = BetheState(M, np.sort(lams).astype(complex), on_shell=True)
    state.max_residual = float(np.max(np.abs(bethe_residuals(state))))
    state.tol = tol
    holes = np.array(sorted(locate_hole(h, lams, [], M) for h in hole_slots))
    cls = DLClassification(
        real_roots=np.sort(lams), close_pairs=[], quartets=[], wide_pairs=[],
        holes=holes, hole_slots=np.sort(hole_slots),
        higher_roots=np.array([], dtype=complex))
    return state, cls


def solve_real_sector_state(M, numbers, tol=1e-13):
    """Any real-root state from explicit quantum numbers (test sweeps)."""
    numbers = np.asarray(numbers, dtype=float)
    grid = real_slots(M, len(numbers), 0)
    for I in numbers:
        if not np.any(np.abs(grid - I) < 1e-9):
            raise QuantumNumberCollision("quantum number %s not in grid" % I)
    lams = solve_real_roots(M, numbers, tol=tol)
    state = BetheState(M, np.sort(lams).astype(complex), on_shell=True)
    state.max_residual = float(np.max(np.abs(bethe_residuals(state))))
    state.tol = tol
    return state


def solve_close_pair_state(M, hole_slots, n2s=1, center_seeds=None,
                           tol=1e-12, max_iter=200, freeze_m=None):
    """Solve a state with ``n2s`` 2-strings and the given vacated slots.

    Returns (BetheState, DLClassification).  Above ``freeze_m`` (default
    48) the deviations are frozen to exact zero and flagged; the
    downstream determinant formulas then switch to regularized columns.
    A deviation below 1e-13 at small M raises DeviationUnderflow unless
    BETHEXX_PRECISION=extended, in which case it is refined with mpmath.
    """
    freeze_m = DEVIATION_FREEZE_M if freeze_m is None else freeze_m
    hole_slots = np.asarray(hole_slots, dtype=float)
    n_h = len(hole_slots)
    if n_h % 2:
        raise QuantumNumberCollision("hole count must be even")
    n_tilde = n2s
    spin = n_h // 2 - n_tilde
    if spin < 0:
        raise QuantumNumberCollision("n_h/2 - n_tilde must be >= 0")
    N = M // 2 - spin
    n_r = N - 2 * n2s
    numbers = occupied_from_holes(M, n_r, n2s, hole_slots)

    if center_seeds is None:
        rough = [_seed_rapidity(M, I) for I in numbers]
        theta_est = [locate_hole(h, rough, [], M) for h in hole_slots]
        cands = higher_level_roots(np.sort(theta_est), n_tilde)
        real_c = sorted({round(float(m.real), 6) for br in cands for m in br
                         if abs(m.imag) < 1e-6})
        if len(real_c) < n2s:
            raise NonConvergence("no real higher-level center seed found")
        center_seeds = real_c[-n2s:]
    center_seeds = list(np.atleast_1d(center_seeds).astype(float))

    reals0 = np.array([_seed_rapidity(M, I) for I in numbers])
    best = None
    for signs in _sign_patterns(n2s):
        try:
            sol = _solve_mixed(M, numbers, reals0, center_seeds, signs,
                               tol, max_iter)
        except NonConvergence:
            continue
        if best is None or sol["resid"] < best["resid"]:
            best = sol
        if sol["resid"] < tol:
            break
    if best is None:
        raise NonConvergence("close-pair Newton failed for all deviation signs")

    reals, strings = best["reals"], best["strings"]
    frozen = M > freeze_m
    pairs, roots = [], list(np.sort(reals).astype(complex))
    for (c, d) in strings:
        if frozen:
            d = 0.0
        elif abs(d) < DEVIATION_UNDERFLOW:
            if os.environ.get("BETHEXX_PRECISION", "double") == "extended":
                d = refine_delta_extended(M, reals, strings, c, d)
            else:
                raise DeviationUnderflow(
                    "delta = %.3e below %.0e; set BETHEXX_PRECISION=extended"
                    % (abs(d), DEVIATION_UNDERFLOW))
        jp = len(roots)
        pairs.append(ClosePair(jp, jp + 1, complex(c), complex(d)))
        roots.extend([pairs[-1].lam_plus, pairs[-1].lam_minus])

    state = BetheState(M, np.array(roots), on_shell=True, pairs=pairs,
                       frozen_deviation=frozen)
    res = float(np.max(np.abs(bethe_residuals(state))))
    state.max_residual = res
    state.tol = tol
    if res > 1e-9:
        raise NonConvergence("post-solve residual %.2e too large" % res,
                             residual=res)
    zpairs = _strings_to_pairs(strings)
    holes = np.array(sorted(
        locate_hole(h, reals, zpairs, M) for h in hole_slots))
    cls = DLClassification(
        real_roots=np.sort(reals),
        close_pairs=[(p.center, p.delta) for p in pairs],
        quartets=[], wide_pairs=[],
        holes=holes, hole_slots=np.sort(hole_slots),
        higher_roots=np.array([p.center for p in pairs]),
    )
    return state, cls


# ---------------------------------------------------------------------------
# higher-level system
# ---------------------------------------------------------------------------

def higher_level_residuals(holes, mus):
    """ta(mu_a) + 1 with the self-factor's exact -1 divided out.

    ta(lam) = prod_b (lam - th_b - i/2)/(lam - th_b + i/2)
            * prod_b (lam - mu_b + i)/(lam - mu_b - i),
    whose b = a factor is exactly -1, so on shell the remaining product
    equals 1 and ta(mu_a) + 1 = 1 - product.
    """
    holes = np.asarray(holes, dtype=float)
    mus = np.asarray(mus, dtype=complex)
    out = np.zeros(len(mus), dtype=complex)
    for a, mu in enumerate(mus):
        val = np.prod((mu - holes - 0.5j) / (mu - holes + 0.5j))
        for b, nu in enumerate(mus):
            if b == a:
                continue
            val *= (mu - nu + 1j) / (mu - nu - 1j)
        out[a] = 1.0 - val
    return out


def higher_level_log_derivative(holes, mus, a):
    """ta'(mu_a) for an on-shell higher-level solution (where ta = -1)."""
    holes = np.asarray(holes, dtype=float)
    mus = np.asarray(mus, dtype=complex)
    mu = mus[a]
    acc = np.sum(kernel(mu - holes, 0.5)) - np.sum(kernel(mu - mus, 1.0))
    return -TWO_PI * 1j * acc


def higher_level_roots(holes, n_tilde, seeds=None, tol=1e-13):
    """All self-conjugate solutions of the higher-level system found.

    For one unknown the system reduces to a degree n_h - 1 polynomial
    (companion-matrix roots, Newton-polished); for more unknowns a battery
    of damped Newton runs from single-root combinations and conjugate
    seeds is used.  Each branch is a sorted array of n_tilde roots; branch
    selection is left to the caller.
    """
    holes = np.sort(np.asarray(holes, dtype=float))
    if len(holes) % 2:
        raise QuantumNumberCollision("hole count must be even")
    if n_tilde == 0:
        return [np.array([], dtype=complex)]
    if n_tilde == 1:
        num = np.poly(holes + 0.5j)
        den = np.poly(holes - 0.5j)
        out = []
        for r in np.roots(num - den):
            r = _polish_single(holes, r, tol)
            if r is not None:
                out.append(np.array([r]))
        return _dedupe_branches(out)
    singles = [b[0] for b in higher_level_roots(holes, 1)]
    seeds_list = list(seeds) if seeds is not None else []
    mid = float(np.mean(holes))
    spread = max(float(np.ptp(holes)), 1.0)
    for s1 in singles:
        for s2 in singles:
            if abs(s1 - s2) > 1e-8:
                seeds_list.append([s1, s2])
    for y in (0.3, 0.8, 1.4):
        seeds_list.append([mid + 1j * y * spread, mid - 1j * y * spread])
    out = []
    for seed in seeds_list:
        if len(seed) != n_tilde:
            continue
        br = _newton_hl(holes, np.array(seed, dtype=complex), tol)
        if br is not None:
            out.append(np.sort_complex(br))
    return _dedupe_branches(out)


def _polish_single(holes, mu, tol):
    for _ in range(60):
        prod = np.prod((mu - holes - 0.5j) / (mu - holes + 0.5j))
        f = prod - 1.0
        if abs(f) < tol:
            return mu
        der = prod * np.sum(1.0 / (mu - holes - 0.5j) - 1.0 / (mu - holes + 0.5j))
        if der == 0:
            return None
        mu = mu - f / der
    return None


def _newton_hl(holes, mus, tol):
    x = mus.astype(complex)
    for _ in range(80):
        F = higher_level_residuals(holes, x)
        nrm = np.max(np.abs(F))
        if nrm < tol:
            return x
        J = np.zeros((len(x), len(x)), dtype=complex)
        h = 1e-8
        for k in range(len(x)):
            xp = x.copy()
            xp[k] += h
            J[:, k] = (higher_level_residuals(holes, xp) - F) / h
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return None
        scale = 1.0
        for _ in range(20):
            xt = x - scale * step
            if np.max(np.abs(higher_level_residuals(holes, xt))) < nrm:
                x = xt
                break
            scale *= 0.5
        else:
            return None
    return None


def _dedupe_branches(branches):
    out = []
    for b in branches:
        if any(len(b) == len(o) and np.allclose(np.sort_complex(b),
                                                np.sort_complex(o), atol=1e-8)
               for o in out):
            continue
        if _is_self_conjugate_set(b):
            out.append(b)
    return out


def _is_self_conjugate_set(roots, tol=1e-8):
    rem = list(roots)
    for r in roots:
        hits = [k for k, s in enumerate(rem) if abs(np.conj(r) - s) < tol]
        if not hits:
            return False
        rem.pop(hits[0])
    return True


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

class DLClassification:
    """Partition of an excited state's roots into real / close / wide parts.

    Counts satisfy n_tilde = n_2s + 2 n_q + 2 n_w and the total spin
    s = n_h/2 - n_tilde is a nonnegative (half-)integer.
    """

    def __init__(self, real_roots, close_pairs, quartets, wide_pairs,
                 holes, hole_slots=None, higher_roots=None):
        self.real_roots = np.asarray(real_roots, dtype=float)
        self.close_pairs = list(close_pairs)      # [(center, delta)]
        self.quartets = list(quartets)            # [(c, c_conj, delta)]
        self.wide_pairs = list(wide_pairs)        # [(w_plus_root, w_minus_root)]
        self.holes = np.asarray(holes, dtype=float)
        self.hole_slots = hole_slots
        if higher_roots is None:
            higher_roots = self._default_higher_roots()
        self.higher_roots = np.asarray(higher_roots, dtype=complex)

    def _default_higher_roots(self):
        mus = [c for (c, _) in self.close_pairs]
        for (c, cc, _) in self.quartets:
            mus.extend([c, cc])
        for (wp, wm) in self.wide_pairs:
            mus.extend([wp - 0.5j, wm + 0.5j])
        return np.array(mus, dtype=complex)

    @property
    def n_r(self):
        return len(self.real_roots)

    @property
    def n_2s(self):
        return len(self.close_pairs)

    @property
    def n_q(self):
        return len(self.quartets)

    @property
    def n_w(self):
        return len(self.wide_pairs)

    @property
    def n_h(self):
        return len(self.holes)

    @property
    def n_tilde(self):
        return self.n_2s + 2 * self.n_q + 2 * self.n_w

    @property
    def spin(self):
        return self.n_h / 2.0 - self.n_tilde

    def deltas(self):
        out = [d for (_, d) in self.close_pairs]
        for (_, _, d) in self.quartets:
            out.extend([d, np.conj(d)])
        return out


def classify(state, ground=None, real_tol=1e-8, boundary_tol=1e-6):
    """Infer the Destri-Lowenstein partition of an on-shell state.

    Complex roots are matched into conjugate pairs (UnpairedComplexRoot
    otherwise) and split by the imaginary part of their *center* (the pair
    parameter before the +-i/2 shift): |Im center| < 1/2, i.e. member
    |Im| < 1, is close-pair-like; beyond it the pair is wide.  Centers
    within ``boundary_tol`` of the dividing line raise AmbiguousBoundary.
    Close pairs whose deviation data only closes under conjugation
    together with a second pair are grouped into quartets (centers c and
    conj(c), shared deviation).  Holes are the vacancies of the real-root
    quantum numbers relative to the full grid; wide pairs do not consume
    real slots, close-type pairs consume two each.
    """
    if not state.on_shell:
        raise ValueError("classification defined for on-shell states")
    M = state.M
    reals, complexes = [], []
    for r in state.roots:
        if abs(r.imag) < real_tol:
            reals.append(r.real)
        else:
            complexes.append(r)
    used = [False] * len(complexes)
    uppers = []
    for i, r in enumerate(complexes):
        if used[i] or r.imag < 0:
            continue
        best, dist = None, np.inf
        for k, s in enumerate(complexes):
            if used[k] or k == i or s.imag > 0:
                continue
            d = abs(np.conj(r) - s)
            if d < dist:
                best, dist = k, d
        if best is None or dist > 1e-6:
            raise UnpairedComplexRoot("no conjugate partner for %s" % r)
        used[i] = used[best] = True
        uppers.append(r)
    if sum(used) != len(complexes):
        raise UnpairedComplexRoot("complex roots left unpaired")

    close_uppers, wide = [], []
    for u in uppers:
        if abs(u.imag - 1.0) < boundary_tol:
            raise AmbiguousBoundary(
                "pair center within %g of |Im| = 1/2" % boundary_tol)
        if u.imag < 1.0:
            close_uppers.append(u)
        else:
            wide.append((u, np.conj(u)))

    # group close-type pairs: a standalone pair is a 2-string with a real
    # center; two pairs with u_A - conj(u_B) = i form a quartet with
    # c = (u_A + conj(u_B))/2 and delta = (u_A - conj(u_B) - i)/(2i)
    close_pairs, quartets, taken = [], [], [False] * len(close_uppers)
    for i, u in enumerate(close_uppers):
        if taken[i]:
            continue
        mate = None
        for k in range(i + 1, len(close_uppers)):
            # a quartet companion sits at conj-center: the uppers differ by
            # 2i Im(c) and satisfy u_A - conj(u_B) = i + 2i delta
            if not taken[k] and abs(u - np.conj(close_uppers[k]) - 1j) < 0.2 \
                    and abs(u.imag - close_uppers[k].imag) > real_tol:
                mate = k
                break
        if mate is not None:
            ub = close_uppers[mate]
            c = 0.5 * (u + np.conj(ub))
            delta = (u - np.conj(ub) - 1j) / 2j
            taken[i] = taken[mate] = True
            quartets.append((c, np.conj(c), delta))
        else:
            taken[i] = True
            close_pairs.append((complex(u.real), complex(u.imag - 0.5)))

    reals = np.sort(np.asarray(reals))
    zpairs = [(float(u.real), float(u.imag)) for u in uppers]
    n_close = len(close_pairs) + 2 * len(quartets)
    grid = real_slots(M, len(reals), n_close)
    z_vals = np.array([counting_z(g, reals, zpairs, M) for g in reals])
    hole_slots = [g for g in grid
                  if not np.any(np.abs(z_vals - g) < 1e-4)]
    holes = np.array(sorted(
        locate_hole(h, reals, zpairs, M) for h in hole_slots))
    return DLClassification(
        real_roots=reals, close_pairs=close_pairs,
        quartets=quartets, wide_pairs=wide,
        holes=holes, hole_slots=np.array(sorted(hole_slots)))
