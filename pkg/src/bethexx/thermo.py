"""Thermodynamic-limit machinery: densities, scattering factor, and the
perturbed-Cauchy matrices that replace the Gaudin extraction at large M.

Density branches
----------------
rho_a(lam, mu) solves  rho + K * rho = K_a(lam - mu)  on the line.  With
the Nielsen beta function  beta(z) = (Psi((z+1)/2) - Psi(z/2)) / 2  the
closed forms (w = lam - mu, sigma = sign Im mu) are

    |Im mu| < a :   [beta(a + iw) + beta(a - iw)] / (2 pi)
    |Im mu| > a :   [beta(i sigma w + a) - beta(i sigma w - a)] / (2 pi)

The inside branch at a = 1/2 collapses to 1/(2 cosh(pi w)); the outside
branch at a = 1 collapses to K_{1/2}(w + i sigma / 2).  Both reductions,
and the defining equation per branch, are verified by quadrature in the
test suite (the four-digamma a = 1 inside form is the symmetrized one:
the variant with one digamma doubled fails the equation at O(1)).

Matrix conventions follow the finite-size engine: rows of the ground-side
matrix run over the M/2 ground roots, rows of the excited-side matrix over
the ground roots plus i/2; columns are ordered [real-type | pair-type |
polynomial], matching the column order of the direct extraction so that
determinants are comparable without sign juggling.
"""

import numpy as np
from dataclasses import dataclass, field
from scipy.special import loggamma, psi

from . import quadrature
from .core import (
    TWO_PI, counting_derivative_at_root, counting_function,
    counting_log_derivative, kernel, log_counting_function, t_kernel,
)
from .dets import (
    LogComplex, condition_estimate, logdet, lu_solve_refined,
    root_minus_i_root,
)
from .errors import BranchBoundary, CoincidingHoles, PoleArgument

BULK_CUTOFF = 2.5          # |theta| beyond this: decoupling flagged
CONTOUR_ALPHA = 0.2        # default shift of R + i*alpha contours


# ---------------------------------------------------------------------------
# closed-form densities
# ---------------------------------------------------------------------------

def nielsen_beta(z):
    """beta(z) = sum_n (-1)^n / (n + z) = (Psi((z+1)/2) - Psi(z/2)) / 2."""
    z = np.asarray(z, dtype=complex)
    return 0.5 * (psi((z + 1.0) / 2.0) - psi(z / 2.0))


def density(a, lam, mu, branch_tol=1e-10):
    """rho_a(lam, mu): branch-aware solution of rho + K * rho = K_a(lam - mu).

    Raises BranchBoundary when |Im mu| is within ``branch_tol`` of a (the
    two branches genuinely differ across the line).  ``lam`` may be an
    array.
    """
    mu = complex(mu)
    if abs(abs(mu.imag) - a) < branch_tol:
        raise BranchBoundary("|Im mu| within %g of the branch line a=%g"
                             % (branch_tol, a))
    lam = np.asarray(lam, dtype=complex)
    w = lam - mu
    if abs(mu.imag) < a:
        if a == 0.5:
            wc = np.clip(w.real, -700.0 / np.pi, 700.0 / np.pi) + 1j * w.imag
            return 1.0 / (2.0 * np.cosh(np.pi * wc))
        return (nielsen_beta(a + 1j * w) + nielsen_beta(a - 1j * w)) / TWO_PI
    sig = 1.0 if mu.imag > 0 else -1.0
    return (nielsen_beta(1j * sig * w + a) - nielsen_beta(1j * sig * w - a)) / TWO_PI


def density_inside_printed_variant(lam, mu):
    """The a = 1 inside form with the half-shifted digamma doubled.

    Kept only as the rejected alternative for the symmetrization decision;
    it violates evenness in lam - mu and fails the defining equation.
    """
    x = (np.asarray(lam, dtype=complex) - mu) / 2j
    return (psi(1.0 + x) + psi(1.0 - x) - 2.0 * psi(0.5 - x)) / (4.0 * np.pi)


def ground_density(lam):
    """rho_g(lam) = 1/(2 cosh(pi lam)), the half-filled root density."""
    lam = np.asarray(lam, dtype=complex)
    z = np.clip(np.pi * lam.real, -700.0, 700.0) + 1j * np.pi * lam.imag
    return 1.0 / (2.0 * np.cosh(z))


def hole_density(lam):
    """rho_h(lam) = rho_1(lam, 0): solves rho_h + K * rho_h = K(lam)."""
    return density(1.0, lam, 0.0)


def complex_root_density(lam):
    """rho~(lam) = K_{1/2}(lam), the kernel weighting complex-root columns."""
    return kernel(lam, 0.5)


def shifted_lieb_kernel(x):
    """K^(c)(x) = K(x - i/2) + K(x + i/2)."""
    return kernel(x - 0.5j, 1.0) + kernel(x + 0.5j, 1.0)


def boundary_cauchy_density(nu, lam):
    """rho_{1/2}(nu, lam + i/2 - i0) = 1/(2 cosh(pi (nu - lam - i/2))).

    The analytic continuation of the inside branch onto the boundary; it
    equals i/(2 sinh(pi (nu - lam))) with the pole at nu = lam kept below
    any R + i*alpha contour.  2*pi*i times this is the Cauchy kernel
    pi/sinh(pi(lam - nu)).
    """
    z = np.pi * (np.asarray(nu, dtype=complex) - lam - 0.5j)
    z = np.clip(z.real, -700.0, 700.0) + 1j * z.imag
    return 1.0 / (2.0 * np.cosh(z))


def close_pair_factorization(lam, mu, branch_tol=1e-10):
    """Check rho_1(lam, mu-i/2) + rho_1(lam, mu+i/2) = K_{1/2}(lam - mu).

    Valid for |Im mu| < 1/2 (both shifted arguments stay inside the a = 1
    strip); asserts the identity to 1e-10 and returns the common value.
    The normalization constant of the right-hand side is exactly 1, fixed
    by direct evaluation of both sides.
    """
    mu = complex(mu)
    if abs(mu.imag) >= 0.5 - branch_tol:
        raise BranchBoundary("factorization needs |Im mu| < 1/2")
    lhs = density(1.0, lam, mu - 0.5j) + density(1.0, lam, mu + 0.5j)
    rhs = kernel(np.asarray(lam, dtype=complex) - mu, 0.5)
    if not np.allclose(lhs, rhs, atol=1e-10, rtol=1e-10):
        raise AssertionError("close-pair factorization violated")
    return rhs


def density_equation_residual(a, lam, mu, alpha=0.0):
    """rho_a + K * rho_a - K_a at one (lam, mu), by adaptive quadrature.

    The convolution runs over R + i*alpha; alpha = 0 is correct whenever
    the branch solution is smooth on the real line (all cases here).
    """
    val = density(a, lam, mu)
    conv = quadrature.integrate_adaptive(
        lambda nu: kernel(lam - nu, 1.0) * density(a, nu, mu), alpha=alpha)
    return val + conv - kernel(complex(lam) - complex(mu), a)


# ---------------------------------------------------------------------------
# convolution table
# ---------------------------------------------------------------------------

def _conv(f, alpha=0.0):
    return quadrature.integrate_adaptive(f, alpha=alpha)


def convolution_identities(c, c2, th, lam, w, w2):
    """All convolution integrals against their closed forms.

    ``c``/``c2`` are close-pair centers (|Im| < 1/2), ``th``/``lam`` real,
    ``w``/``w2`` wide-pair upper members (Im > 1/2); the conjugates are
    used for the lower members.  Returns {name: (lhs, rhs)}.  The two
    exact zeros of the wide-wide block are included.  Shifts and
    normalizations are the quadrature-fixed ones: relative to the common
    tabulations, the Kc*cauchy entry carries the shift -i/2, the pair of
    cauchy entries carries no 1/(2 pi i), and the Kc*rho~ close-close
    entry is the sum K + K_2.
    """
    wb, w2b = np.conj(w), np.conj(w2)
    rt = complex_root_density
    K = kernel
    out = {}
    al = 0.1
    out["kc_cauchy"] = (
        _conv(lambda nu: shifted_lieb_kernel(c - nu) * boundary_cauchy_density(nu, lam), al),
        K(c - lam - 0.5j, 1.0))
    out["kc_rho1"] = (
        _conv(lambda nu: shifted_lieb_kernel(c - nu) * density(1.0, nu, th)),
        K(c - th, 1.5))
    out["kc_rhot_close"] = (
        _conv(lambda nu: shifted_lieb_kernel(c - nu) * rt(nu - c2)),
        K(c - c2, 1.0) + K(c - c2, 2.0))
    out["kc_rhot_wide_up"] = (
        _conv(lambda nu: shifted_lieb_kernel(c - nu) * rt(nu - w2)),
        K(c - w2 - 1j, 1.0))
    out["kc_rhot_wide_dn"] = (
        _conv(lambda nu: shifted_lieb_kernel(c - nu) * rt(nu - w2b)),
        K(c - w2b + 1j, 1.0))
    out["kw_cauchy_up"] = (
        _conv(lambda nu: K(w + 0.5j - nu, 1.0) * boundary_cauchy_density(nu, lam), al),
        K(w - lam, 0.5))
    out["kw_cauchy_dn"] = (
        _conv(lambda nu: K(wb - 0.5j - nu, 1.0) * boundary_cauchy_density(nu, lam), al),
        K(wb - lam - 1j, 0.5))
    out["kw_rho1_up"] = (
        _conv(lambda nu: K(w + 0.5j - nu, 1.0) * density(1.0, nu, th)),
        K(w - th + 1j, 0.5))
    out["kw_rho1_dn"] = (
        _conv(lambda nu: K(wb - 0.5j - nu, 1.0) * density(1.0, nu, th)),
        K(wb - th - 1j, 0.5))
    out["kw_rhot_close_up"] = (
        _conv(lambda nu: K(w + 0.5j - nu, 1.0) * rt(nu - c)),
        K(w - c + 1j, 1.0))
    out["kw_rhot_close_dn"] = (
        _conv(lambda nu: K(wb - 0.5j - nu, 1.0) * rt(nu - c)),
        K(wb - c - 1j, 1.0))
    out["kw_rhot_wide_zero_up"] = (
        _conv(lambda nu: K(w + 0.5j - nu, 1.0) * rt(nu - w2)),
        0.0)
    out["kw_rhot_wide_cross_up"] = (
        _conv(lambda nu: K(w + 0.5j - nu, 1.0) * rt(nu - w2b)),
        K(w - w2b + 1j, 1.0) - K(w - w2b, 1.0))
    out["kw_rhot_wide_cross_dn"] = (
        _conv(lambda nu: K(wb - 0.5j - nu, 1.0) * rt(nu - w2)),
        K(wb - w2 - 1j, 1.0) - K(wb - w2, 1.0))
    out["kw_rhot_wide_zero_dn"] = (
        _conv(lambda nu: K(wb - 0.5j - nu, 1.0) * rt(nu - w2b)),
        0.0)
    return out


def convolution_table_check(n_draws=10, seed=0):
    """Evaluate every convolution identity at random admissible parameters.

    Returns {identity: max |lhs - rhs| over the draws}.
    """
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(n_draws):
        c = rng.uniform(-1.2, 1.2) + 1j * rng.uniform(-0.32, 0.32)
        c2 = rng.uniform(-1.2, 1.2) + 1j * rng.uniform(-0.32, 0.32)
        th = rng.uniform(-1.5, 1.5)
        lam = rng.uniform(-1.5, 1.5)
        w = rng.uniform(-1.0, 1.0) + 1j * rng.uniform(0.68, 1.25)
        w2 = rng.uniform(-1.0, 1.0) + 1j * rng.uniform(0.68, 1.25)
        for name, (lhs, rhs) in convolution_identities(c, c2, th, lam, w, w2).items():
            err = abs(lhs - rhs)
            worst[name] = max(worst.get(name, 0.0), err)
    return worst


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

_ZETA_PRIME_M1 = -0.16542114370045092921    # zeta'(-1) = 1/12 - log(Glaisher)
_B_EVEN = [-1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6,
           -3617.0 / 510, 43867.0 / 798, -174611.0 / 330, 854513.0 / 138,
           -236364091.0 / 2730, 8553103.0 / 6]   # B_4 .. B_26


def barnes_log_g(z):
    """log G(z) for the Barnes G-function, via recurrence + asymptotics.

    The argument is shifted with log G(z) = log G(z+1) - log Gamma(z) until
    Re >= 8, then the 12-term asymptotic series of log G(1+w) is summed.
    Raises PoleArgument at nonpositive integers (zeros of G give -inf).
    """
    z = complex(z)
    if abs(z - round(z.real)) < 1e-14 and round(z.real) <= 0:
        raise PoleArgument("Barnes G vanishes at nonpositive integers")
    shift = 0.0 + 0.0j
    while z.real < 8.0:
        shift -= loggamma(z)
        z = z + 1.0
    w = z - 1.0
    lw = np.log(w)
    out = w * w * (0.5 * lw - 0.75) + 0.5 * w * np.log(TWO_PI) \
        - lw / 12.0 + _ZETA_PRIME_M1
    w2k = w * w
    for k, b in enumerate(_B_EVEN, start=1):
        out += b / (4.0 * k * (k + 1.0) * w2k)
        w2k *= w * w
    return out + shift


def spinon_scattering_factor(holes):
    """S({theta}) as a LogComplex: the Barnes-G product over hole pairs.

    S = (-1)^((n_h+2)/2) 2^((n_h(n_h-2)+2)/2) pi^((n_h(n_h-3)+2)/2)
        / G(1/2)^(2 n_h)
        * prod_{a != b} G(x_ab) G(1+x_ab) / (G(1/2+x_ab) G(3/2+x_ab)),
    with x_ab = (theta_a - theta_b)/(2i).  Symmetric under permutations;
    coinciding holes degenerate the product (G(0) = 0) and raise
    CoincidingHoles.
    """
    holes = np.asarray(holes, dtype=float)
    n = len(holes)
    if n % 2:
        raise ValueError("hole count must be even")
    diffs = holes[:, None] - holes[None, :]
    off = np.abs(diffs)[~np.eye(n, dtype=bool)]
    if n > 1 and off.min() < 1e-12:
        raise CoincidingHoles("coinciding hole rapidities")
    logval = (0.5 * (n * (n - 2) + 2)) * np.log(2.0) \
        + (0.5 * (n * (n - 3) + 2)) * np.log(np.pi) \
        - 2.0 * n * barnes_log_g(0.5)
    phase = (-1.0) ** ((n + 2) // 2)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            x = (holes[a] - holes[b]) / 2j
            logval += barnes_log_g(x) + barnes_log_g(1.0 + x) \
                - barnes_log_g(0.5 + x) - barnes_log_g(1.5 + x)
    val = LogComplex(float(np.real(logval)), complex(np.exp(1j * np.imag(logval))))
    return val * LogComplex.from_value(phase)


# ---------------------------------------------------------------------------
# higher-level Gaudin system
# ---------------------------------------------------------------------------

@dataclass
class HigherLevelSystem:
    """Hole rapidities, higher-level roots, and the extraction kernel.

    gamma_hl is the higher-level Gaudin matrix ta'(mu_a) d_ab
    - 2 pi i K(mu_a - mu_b); d_hole the density matrix
    -2 pi i K_{1/2}(mu_a - theta_b); kernel solves gamma_hl . kernel = d_hole.
    """

    holes: np.ndarray
    mus: np.ndarray
    gamma_hl: np.ndarray = field(init=False)
    d_hole: np.ndarray = field(init=False)
    kernel: np.ndarray = field(init=False)

    def __post_init__(self):
        from .solve import higher_level_log_derivative  # local: keeps import graph acyclic for typing tools
        self.holes = np.asarray(self.holes, dtype=float)
        self.mus = np.asarray(self.mus, dtype=complex)
        nt, nh = len(self.mus), len(self.holes)
        g = np.zeros((nt, nt), dtype=complex)
        for a in range(nt):
            for b in range(nt):
                g[a, b] = -TWO_PI * 1j * kernel(self.mus[a] - self.mus[b], 1.0)
            g[a, a] += higher_level_log_derivative(self.holes, self.mus, a)
        self.gamma_hl = g
        self.d_hole = -TWO_PI * 1j * kernel(
            self.mus[:, None] - self.holes[None, :], 0.5) if nt else \
            np.zeros((0, nh), dtype=complex)
        self.kernel = lu_solve_refined(g, self.d_hole) if nt else \
            np.zeros((0, nh), dtype=complex)

    def residual(self):
        """max |gamma_hl . kernel - d_hole| (definition of the solve)."""
        if len(self.mus) == 0:
            return 0.0
        return float(np.max(np.abs(self.gamma_hl @ self.kernel - self.d_hole)))


# ---------------------------------------------------------------------------
# perturbed Cauchy matrices
# ---------------------------------------------------------------------------

def _aprime_at_point(state, x):
    """a'(x) at a point where a(x) = -1 exactly (roots via pair data, holes)."""
    return -counting_log_derivative(state, x)


def _cauchy(x, y):
    """pi / sinh(pi (x - y)) with overflow-safe tails."""
    z = np.pi * (np.asarray(x) - y)
    with np.errstate(over="ignore"):
        out = np.pi / np.sinh(z)
    return np.where(np.isfinite(out), out, 0.0)


def _close_pair_cauchy_sum(u, delta):
    """pi/sinh(pi(lam_+ - lam)) + pi/sinh(pi(lam_- - lam)) for a 2-string.

    u = c - lam; exact cancellation-free form
    -2 pi sinh(pi u) sin(pi delta) / (sinh^2 sin^2 + cosh^2 cos^2);
    O(delta) uniformly, and exactly zero at delta = 0.
    """
    s, ch = np.sinh(np.pi * u), np.cosh(np.pi * u)
    sd, cd = np.sin(np.pi * delta), np.cos(np.pi * delta)
    return -2.0 * np.pi * s * sd / (s * s * sd * sd + ch * ch * cd * cd)


def log_delta_estimate(excited, pair):
    """log of the string-deviation fixed point at the frozen state.

    log delta = M Log(c/(c+i)) + sum_{roots g not in pair}
    Log((lam_+ + i - g)/(lam_+ - i - g)), evaluated at delta = 0.  Used to
    reconstruct the finite combination delta * a_g(lam_-) when the solver
    froze the deviation to zero.
    """
    c = pair.center
    lam_p = c + 0.5j
    val = excited.M * np.log(c / (c + 1j))
    skip = {pair.j_plus, pair.j_minus}
    for k, g in enumerate(excited.roots):
        if k in skip:
            continue
        val += np.log(lam_p + 1j - g) - np.log(lam_p - 1j - g)
    return val


def build_f_ground(ground, excited, classification):
    """Ground-side perturbed Cauchy matrix (M/2 square).

    Columns: [excited real roots, i/2, close-pair upper centers c+ |
    close-pair minus columns | wide plus | wide minus]; rows over the
    ground roots.  Every entry carries the exact finite-M counting data
    (a_g at the probes, a'_g at the ground roots).
    """
    lam = ground.roots.real.astype(float)
    ap_g = np.array([counting_derivative_at_root(ground, j)
                     for j in range(ground.n_roots)])
    cols = []
    # real block + i/2
    for gk in list(classification.real_roots) + [0.5j]:
        a_gk = counting_function(ground, gk)
        cols.append((1.0 + a_gk) * _cauchy(gk, lam) / ap_g)
    # c+ columns join the Cauchy block (the counting function is
    # exponentially small at the upper centers)
    for (c, d) in classification.close_pairs:
        cols.append(_cauchy(c + 0.5j, lam) / ap_g)
    # c- columns
    for pair_idx, (c, d) in enumerate(classification.close_pairs):
        rho_diff = TWO_PI * 1j * (density(1.0, lam, c + 0.5j)
                                  - density(1.0, lam, c - 0.5j))
        if excited.frozen_deviation or d == 0:
            pair = excited.pairs[pair_idx]
            log_a = log_counting_function(ground, c - 0.5j)
            amp = np.exp(log_a + log_delta_estimate(excited, pair))
            sing = amp * (-2.0 * np.pi ** 2) * np.sinh(np.pi * (c - lam)) \
                / np.cosh(np.pi * (c - lam)) ** 2
        else:
            a_minus = counting_function(ground, c - 0.5j - 1j * d)
            sing = a_minus * _close_pair_cauchy_sum(c - lam, d)
        cols.append((sing + rho_diff) / ap_g)
    # wide pairs
    for (wp, wm) in classification.wide_pairs:
        wcen = wp - 0.5j
        cols.append(TWO_PI * 1j * (density(0.5, lam, wcen + 1j)
                                   - density(0.5, lam, wcen)) / ap_g)
    for (wp, wm) in classification.wide_pairs:
        wcen = wm + 0.5j
        cols.append(TWO_PI * 1j * (density(0.5, lam, wcen)
                                   - density(0.5, lam, wcen - 1j)) / ap_g)
    return np.column_stack(cols)


def hole_weights(excited, classification):
    """a'_e at the holes (where a_e = -1 exactly) and the bulk flag."""
    th = classification.holes
    ap = np.array([_aprime_at_point(excited, t) for t in th])
    outside = np.abs(th) > BULK_CUTOFF
    return ap, bool(np.any(outside))


def auxiliary_hole_block(ground, excited, classification, hls, mode="decoupled"):
    """g(theta_a, lam_j): the hole block of the excited-side solution.

    ``decoupled`` uses the leading 1/sinh(pi(lam_j - theta_a)); ``full``
    solves the n_h x n_h dressed system
    (I - D_dr diag(1/a'_e(theta))) g = rhs, whose correction is O(1/M)
    for holes in the bulk.  Rows follow the probe order (ground roots,
    then i/2); columns the holes.
    """
    lam_check = np.concatenate([ground.roots, [0.5j]])
    th = classification.holes
    rhs = 1.0 / np.sinh(np.pi * (lam_check[:, None] - th[None, :]))
    if mode == "decoupled" or len(th) == 0:
        return rhs
    ap_th, _ = hole_weights(excited, classification)
    d_h = -TWO_PI * 1j * hole_density(th[:, None] - th[None, :])
    if len(hls.mus):
        d_dr = d_h - hls.d_hole.T @ np.linalg.solve(hls.gamma_hl, hls.d_hole)
    else:
        d_dr = d_h
    A = np.eye(len(th)) - d_dr @ np.diag(1.0 / ap_th)
    return np.linalg.solve(A, rhs.T).T


def build_f_excited(ground, excited, classification, hls, mode="decoupled"):
    """Excited-side perturbed Cauchy matrix ((M/2 + 1) square).

    Columns: [excited real roots | one recombined column per 2-string
    (center shifted by +i/2) | higher-level columns driven by the
    extraction kernel | the two polynomial columns].  Rows over the ground
    roots plus i/2.
    """
    lam_check = np.concatenate([ground.roots, [0.5j]])
    a_e = np.array([counting_function(excited, x) for x in lam_check])
    pref = np.pi * (1.0 + a_e)
    th = classification.holes
    ap_th, outside = hole_weights(excited, classification)
    g_block = auxiliary_hole_block(ground, excited, classification, hls, mode)

    def hole_sum(y):
        """sum_b rho_h(y - theta_b) g(theta_b, .) / a'_e(theta_b)."""
        if len(th) == 0:
            return 0.0
        rh = hole_density(y - th)
        return g_block @ (rh / ap_th)

    cols = []
    for gk in classification.real_roots:
        ap_gk = _aprime_at_point(excited, gk)
        col = pref / ap_gk * (1.0 / np.sinh(np.pi * (lam_check - gk))
                              - TWO_PI * 1j * hole_sum(gk))
        cols.append(col)
    for (c, d) in classification.close_pairs:
        col = pref * (1.0 / np.sinh(np.pi * (lam_check - c - 0.5j))
                      - TWO_PI * 1j * hole_sum(c + 0.5j))
        cols.append(col)
    for a in range(len(hls.mus)):
        col = pref * (g_block @ hls.kernel[a])
        cols.append(col)
    for p in range(2):
        cols.append(a_e * (lam_check + 1j) ** p - lam_check ** p)
    return np.column_stack(cols), outside


# ---------------------------------------------------------------------------
# thermodynamic form factor
# ---------------------------------------------------------------------------

def _log_q_ratio_regularized(ground, excited):
    """The two Baxter products with the excited close-pair zeros removed.

    q_e(lam_+ - i) vanishes linearly in the string deviation; its
    regularized version divides out the 2i*delta factor, i.e. simply skips
    the partner factor, matching the 1/(2i delta) extracted from the
    recombined pair column of the excited-side matrix.
    """
    pair_partner = {}
    for p in excited.pairs:
        pair_partner[p.j_plus] = p.j_minus
    num1, den1 = [], []
    for j in range(excited.n_roots):
        mu = excited.roots[j]
        num1.extend(mu - 1j - ground.roots)
        skip = pair_partner.get(j)
        for k in range(excited.n_roots):
            if k == skip:
                continue
            den1.append(root_minus_i_root(excited, j, k))
    p1 = LogComplex.from_product(num1) / LogComplex.from_product(den1)
    num2, den2 = [], []
    for k in range(ground.n_roots):
        lam = ground.roots[k]
        num2.extend(lam - 1j - excited.roots)
        den2.extend(lam - 1j - ground.roots)
    p2 = LogComplex.from_product(num2) / LogComplex.from_product(den2)
    return p1, p2


def bound_state_prefactor(M, classification, hls):
    """Diagnostic prefactor M^(-n_h) S({theta}) x rational factor.

    The rational factor is prod_{a,b}(mu_a - theta_b - i/2) /
    [prod_{a,b}(mu_a - mu_b - i) prod_{a<b}(theta_a - theta_b)]; the
    remaining finite determinants of the fully extracted representation
    are out of scope here, so this quantity is reported as a diagnostic
    only.
    """
    th, mus = classification.holes, hls.mus
    nh = len(th)
    val = spinon_scattering_factor(th) * LogComplex.from_value(float(M) ** (-nh))
    fac = []
    for a in range(len(mus)):
        for b in range(nh):
            fac.append(mus[a] - th[b] - 0.5j)
    num = LogComplex.from_product(fac) if fac else LogComplex.from_value(1.0)
    den_f = []
    for a in range(len(mus)):
        for b in range(len(mus)):
            den_f.append(mus[a] - mus[b] - 1j)
    for a in range(nh):
        for b in range(a + 1, nh):
            den_f.append(th[a] - th[b])
    den = LogComplex.from_product(den_f) if den_f else LogComplex.from_value(1.0)
    return val * num / den


def thermo_form_factor(ground, excited, classification, mus=None,
                       mode="decoupled"):
    """|F_z|^2 from the perturbed-Cauchy representation at large finite M.

    ``mus`` optionally pins the higher-level roots; by default they are
    solved from the hole rapidities, picking the branch closest to the
    solver's close-pair centers (plus wide-pair centers verbatim).
    Returns a FormFactorResult with pipeline "thermo"; holes outside the
    bulk window only flag the result.
    """
    from .dets import FormFactorResult

    M = ground.M
    diag = {"delta": [complex(d) for d in classification.deltas()]}
    if excited.n_roots != M // 2 - 1 or classification.spin != 1:
        diag["selection_rule_zero"] = True
        return FormFactorResult(0.0, "thermo", diag)
    if mus is None:
        mus = _select_higher_roots(classification)
    hls = HigherLevelSystem(classification.holes, np.asarray(mus, dtype=complex))
    diag["higher_level_residual"] = hls.residual()
    diag["higher_roots"] = [complex(m) for m in hls.mus]

    f_g = build_f_ground(ground, excited, classification)
    f_e, outside = build_f_excited(ground, excited, classification, hls, mode)
    p1, p2 = _log_q_ratio_regularized(ground, excited)
    combo = LogComplex.from_value(-2.0) * p1 * p2 * logdet(f_g) * logdet(f_e)
    val = combo.value()
    diag.update({
        "phase": complex(combo.phase),
        "imag_fraction": abs(val.imag) / abs(val) if val != 0 else 0.0,
        "cond_f_g": condition_estimate(f_g),
        "cond_f_e": condition_estimate(f_e),
        "holes_outside_bulk": outside,
        "bound_state_prefactor": complex(
            bound_state_prefactor(M, classification, hls).value())
        if len(classification.holes) else None,
    })
    return FormFactorResult(abs(val), "thermo", diag)


def _select_higher_roots(classification):
    """Higher-level branch matched to the solver's complex-root centers."""
    from .solve import higher_level_roots

    n_t = classification.n_tilde
    if n_t == 0:
        return np.array([], dtype=complex)
    target = classification.higher_roots
    branches = higher_level_roots(classification.holes, n_t)
    if not branches:
        return target
    def dist(br):
        return np.sum(np.abs(np.sort_complex(br) - np.sort_complex(target)))
    return min(branches, key=dist)


# ---------------------------------------------------------------------------
# condensed-sea string center
# ---------------------------------------------------------------------------

def string_center_condensed(M, holes, c0, tol=1e-10, max_iter=80):
    """Finite-M 2-string center with the real-root sea condensed.

    Solves the cancellation-safe string equation in which the sum over
    real roots is replaced by density integrals at *prescribed* hole
    rapidities (slot density rho_g + (1/M) sum rho_h(.-theta) plus the
    string's own backflow -K_{1/2}(.-c), minus the explicit hole factors):

        log((1+d)/d) + M Log((c+id)/(c+i(1+d)))
          + M int rho_g L + sum_a [int rho_h(.-th_a) L - L(th_a)]
          - int K_{1/2}(.-c) L  =  2 pi i k,
        L(nu) = Log(lam_+ + i - nu) - Log(lam_+ - i - nu).

    The M-proportional part is purely real (it sets the exponential scale
    of the deviation), so the phase half of the equation reduces to the
    higher-level system as M -> infinity and the center approaches the
    higher-level root with an O(M delta) = O(M^(-infinity)) gap.

    Returns (center, delta, residual).
    """
    holes = np.asarray(holes, dtype=float)

    def big_l(nu, lam_p):
        return np.log(lam_p + 1j - nu) - np.log(lam_p - 1j - nu)

    def equation(c, u, k):
        delta = np.exp(u)
        lam_p = c + 1j * (0.5 + delta)
        val = np.log1p(delta) - np.log(complex(delta))
        val += M * np.log((c + 1j * delta) / (c + 1j * (1.0 + delta)))
        val += M * quadrature.integrate_line(
            lambda nu: ground_density(nu) * big_l(nu, lam_p))
        for th in holes:
            val += quadrature.integrate_line(
                lambda nu: hole_density(nu - th) * big_l(nu, lam_p))
            val -= big_l(th, lam_p)
        val += quadrature.integrate_line(
            lambda nu: -kernel(nu - c, 0.5) * big_l(nu, lam_p))
        return val - TWO_PI * 1j * k

    x = np.array([float(c0), np.log(1e-3)])
    k = int(np.round(equation(x[0], x[1], 0).imag / TWO_PI))

    def resid(xv):
        g = equation(xv[0], xv[1], k)
        return np.array([g.real, g.imag])

    F = resid(x)
    for _ in range(max_iter):
        nrm = np.max(np.abs(F))
        if nrm < tol:
            break
        J = np.zeros((2, 2))
        for j in range(2):
            xp = x.copy()
            xp[j] += 1e-7
            J[:, j] = (resid(xp) - F) / 1e-7
        step = np.linalg.solve(J, F)
        scale, accepted = 1.0, False
        for _ in range(20):
            xt = x - scale * step
            Ft = resid(xt)
            if np.max(np.abs(Ft)) < nrm:
                x, F, accepted = xt, Ft, True
                break
            scale *= 0.5
        if not accepted:
            break   # finite-difference noise floor
    return float(x[0]), float(np.exp(x[1])), float(np.max(np.abs(F)))


# ---------------------------------------------------------------------------
# condensation property
# ---------------------------------------------------------------------------

def condensation_check(state, z, alpha=CONTOUR_ALPHA):
    """Both sides of the condensation identity for g(lam) = K(lam - z).

    (1/M) sum_j g(lam_j)  vs  int_{R+i alpha} g rho_g + 2 pi i sum_poles
    rho_g(z_p) Res g(z_p) / (1 + a(z_p)), the pole sum running over the
    poles of g lying strictly between the real axis and the contour.
    Returns (lhs, rhs).
    """
    lam = state.roots
    lhs = complex(np.sum(kernel(lam - z, 1.0))) / state.M
    rhs = quadrature.integrate_adaptive(
        lambda nu: kernel(nu - z, 1.0) * ground_density(nu), alpha=alpha)
    for z_p, res in ((z + 1j, 1.0 / (TWO_PI * 1j)), (z - 1j, -1.0 / (TWO_PI * 1j))):
        if 0.0 < z_p.imag < alpha:
            a_p = counting_function(state, z_p)
            rhs += TWO_PI * 1j * ground_density(z_p) * res / (1.0 + a_p)
    return lhs, rhs
