"""Dense complex determinant representations of scalar products and form factors.

Every determinant and prefactor product is carried as (log-magnitude,
unit phase): the individual determinants grow/shrink exponentially with
the chain length and only their combination is O(1).

Matrix conventions (probe = generic spectral parameter, root = member of
the on-shell set; a = exponential counting function of the on-shell set):

* scalar-product matrix  S[j, k] = a(mu_k) t(mu_k - lam_j) - t(lam_j - mu_k)
  with rows j over roots and columns k over probes;
* its rectangular extension appends columns a(mu)(mu + i)^p - mu^p,
  p = 0..ell-1, for descendant states with ell extra lowering operators;
* norm (Gaudin) matrix  G[j, k] = a'(lam_j) d_jk - 2 pi i K(lam_j - lam_k).

Close pairs c +- i(1/2+delta) make a'(lam) and several prefactor factors
singular as delta -> 0; all such entries are evaluated from the exact
(center, delta) pair data carried by the state, and the recombinations
that keep determinants finite at delta = 0 are provided.
"""

import numpy as np
import scipy.linalg
from dataclasses import dataclass, field
from math import factorial

from .core import (
    TWO_PI, baxter_q, counting_derivative_at_root, counting_function,
    kernel, log_phase_factor, t_kernel,
)
from .errors import CoincidingParameters, SingularGaudin

IMAG_UNIT = 1j


# ---------------------------------------------------------------------------
# log-magnitude / phase arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogComplex:
    """A complex number stored as exp(logmag) * phase with |phase| = 1."""

    logmag: float
    phase: complex

    @staticmethod
    def from_value(z):
        z = complex(z)
        r = abs(z)
        if r == 0.0:
            return LogComplex(-np.inf, 1.0 + 0j)
        return LogComplex(float(np.log(r)), z / r)

    @staticmethod
    def from_product(factors):
        logmag = 0.0
        phase = 1.0 + 0j
        for f in factors:
            fl = f if isinstance(f, LogComplex) else LogComplex.from_value(f)
            logmag += fl.logmag
            phase *= fl.phase
        return LogComplex(logmag, phase / abs(phase) if phase != 0 else 1.0 + 0j)

    def __mul__(self, other):
        o = other if isinstance(other, LogComplex) else LogComplex.from_value(other)
        ph = self.phase * o.phase
        return LogComplex(self.logmag + o.logmag, ph / abs(ph))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = other if isinstance(other, LogComplex) else LogComplex.from_value(other)
        ph = self.phase / o.phase
        return LogComplex(self.logmag - o.logmag, ph / abs(ph))

    def inverse(self):
        return LogComplex(-self.logmag, 1.0 / self.phase)

    def value(self):
        return np.exp(self.logmag) * self.phase

    def abs(self):
        return float(np.exp(self.logmag))


def logdet(a):
    """Determinant of a dense complex matrix as a LogComplex (LU, partial pivoting)."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n == 0:
        return LogComplex(0.0, 1.0 + 0j)
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    d = np.diag(lu)
    if np.any(d == 0):
        return LogComplex(-np.inf, 1.0 + 0j)
    logmag = float(np.sum(np.log(np.abs(d))))
    phase = complex(np.prod(d / np.abs(d)))
    if np.sum(piv != np.arange(n)) % 2:
        phase = -phase
    return LogComplex(logmag, phase / abs(phase))


def condition_estimate(a):
    """1-norm condition estimate kappa_1(a) from the LU factorization."""
    a = np.asarray(a, dtype=complex)
    if a.shape[0] == 0:
        return 1.0
    anorm = np.linalg.norm(a, 1)
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    rcond, info = scipy.linalg.lapack.zgecon(lu, anorm)
    if info != 0 or rcond == 0:
        return np.inf
    return float(1.0 / rcond)


def lu_solve_refined(a, b):
    """LU solve with one step of iterative refinement."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    lu_piv = scipy.linalg.lu_factor(a, check_finite=False)
    x = scipy.linalg.lu_solve(lu_piv, b, check_finite=False)
    r = b - a @ x
    return x + scipy.linalg.lu_solve(lu_piv, r, check_finite=False)


def dump_matrix(a, path):
    """Write a dense complex matrix as row-major little-endian float64 pairs.

    Layout: two uint64 (rows, cols) followed by rows*cols*(re, im) float64.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    with open(path, "wb") as fh:
        np.array(a.shape, dtype="<u8").tofile(fh)
        a.astype("<c16").tofile(fh)


def load_matrix(path):
    with open(path, "rb") as fh:
        shape = np.fromfile(fh, dtype="<u8", count=2)
        data = np.fromfile(fh, dtype="<c16")
    return data.reshape(int(shape[0]), int(shape[1]))


# ---------------------------------------------------------------------------
# pair-aware factor helpers
# ---------------------------------------------------------------------------

def _pair_lookup(state):
    """Map root index -> (pair, +-1) for close-pair members."""
    out = {}
    for p in state.pairs:
        out[p.j_plus] = (p, +1)
        out[p.j_minus] = (p, -1)
    return out


def root_minus_i_root(state, j, k):
    """lam_j - i - lam_k with pair-partner differences taken from (c, delta).

    For a (+,-) pair this is exactly 2i*delta; for (-,+) it is -2i(1+delta).
    """
    pl = _pair_lookup(state)
    if j in pl and k in pl and pl[j][0] is pl[k][0] and j != k:
        delta = pl[j][0].delta
        if pl[j][1] > 0:
            return 2j * delta
        return -2j * (1.0 + delta)
    return state.roots[j] - 1j - state.roots[k]


def log_q_shifted_minus_i(state, j):
    """Factor list of q(lam_j - i) = prod_k (lam_j - i - lam_k), pair-safe."""
    return [root_minus_i_root(state, j, k) for k in range(state.n_roots)]


def cross_q_minus_i(state_roots_of, z):
    """q_{state}(z - i) for an external point z (no cancellation risk)."""
    return baxter_q(state_roots_of, z - 1j)


# ---------------------------------------------------------------------------
# scalar products
# ---------------------------------------------------------------------------

def _check_distinct(xs, what):
    xs = np.asarray(xs)
    n = len(xs)
    if n < 2:
        return
    diff = xs[:, None] - xs[None, :]
    diff[np.diag_indices(n)] = 1.0
    if np.min(np.abs(diff)) < 1e-13:
        raise CoincidingParameters("coinciding %s make the prefactor singular" % what)


def slavnov_matrix(state, probes):
    """Scalar-product matrix between an on-shell state and generic probes.

    Returns the N x N matrix S[j, k] = a(mu_k) t(mu_k - lam_j) - t(lam_j - mu_k).
    """
    probes = np.asarray(probes, dtype=complex)
    if len(probes) != state.n_roots:
        raise ValueError("square scalar product needs len(probes) == N")
    _check_distinct(state.roots, "roots")
    _check_distinct(probes, "probes")
    a_p = np.array([counting_function(state, m) for m in probes])
    lam = state.roots[:, None]
    mu = probes[None, :]
    return a_p[None, :] * t_kernel(mu - lam) - t_kernel(lam - mu)


def slavnov_prefactor(state, probes):
    """prod_{j,k}(mu_j - lam_k - i) / prod_{j<k}(lam_j - lam_k)(mu_k - mu_j)."""
    probes = np.asarray(probes, dtype=complex)
    lam = state.roots
    factors = [LogComplex.from_value(m - lk - 1j) for m in probes for lk in lam]
    num = LogComplex.from_product(factors)
    den_factors = []
    n = len(lam)
    for j in range(n):
        for k in range(j + 1, n):
            den_factors.append(lam[j] - lam[k])
            den_factors.append(probes[k] - probes[j])
    den = LogComplex.from_product(den_factors)
    return num / den


def scalar_product(state, probes):
    """<state | Psi(probes)> as a LogComplex (Slavnov representation)."""
    m = slavnov_matrix(state, probes)
    return slavnov_prefactor(state, probes) * logdet(m)


def foda_wheeler_matrix(state, probes, ell):
    """(N+ell)-square matrix for descendant scalar products.

    Rows run over the probes; the first N columns are the t-kernel block
    against the on-shell roots, the last ell columns are
    a(mu)(mu + i)^p - mu^p with p = 0..ell-1.
    """
    probes = np.asarray(probes, dtype=complex)
    n = state.n_roots
    if len(probes) != n + ell:
        raise ValueError("need len(probes) == N + ell")
    if ell not in (0, 1, 2):
        raise ValueError("ell must be 0, 1 or 2")
    _check_distinct(state.roots, "roots")
    _check_distinct(probes, "probes")
    a_p = np.array([counting_function(state, m) for m in probes])
    out = np.zeros((n + ell, n + ell), dtype=complex)
    if n:
        lam = state.roots[None, :]
        mu = probes[:, None]
        out[:, :n] = a_p[:, None] * t_kernel(mu - lam) - t_kernel(lam - mu)
    for p in range(ell):
        out[:, n + p] = a_p * (probes + 1j) ** p - probes ** p
    return out


def foda_wheeler_prefactor(state, probes, ell):
    """Prefactor of the descendant scalar product, ell in {0, 1, 2}.

    (-1)^ell ell! prod_k q(mu_k - i)
    / [prod_{j<k}(lam_j - lam_k) prod_{j<k}(mu_k - mu_j)].

    The mu-Vandermonde keeps the Slavnov orientation, so the ell = 0 case
    is *identical* to :func:`slavnov_prefactor`; the (-1)^ell sign is fixed
    against the brute-force pairing with the lowering operator
    S_- = sum_m sigma^-_m on the descendant side.
    """
    probes = np.asarray(probes, dtype=complex)
    lam = state.roots
    n = state.n_roots
    sign = (-1.0) ** ell
    num_factors = [LogComplex.from_value(baxter_q(state, m - 1j)) for m in probes]
    num = LogComplex.from_product(num_factors) * LogComplex.from_value(
        sign * float(factorial(ell)))
    den_factors = []
    for j in range(n):
        for k in range(j + 1, n):
            den_factors.append(lam[j] - lam[k])
    for j in range(len(probes)):
        for k in range(j + 1, len(probes)):
            den_factors.append(probes[k] - probes[j])
    return num / LogComplex.from_product(den_factors)


def descendant_scalar_product(state, probes, ell):
    """Scalar product of the ell-fold lowered state with Psi(probes)."""
    m = foda_wheeler_matrix(state, probes, ell)
    return foda_wheeler_prefactor(state, probes, ell) * logdet(m)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def gaudin_matrix(state):
    """Norm matrix G[j,k] = a'(lam_j) d_jk - 2 pi i K(lam_j - lam_k).

    Close-pair diagonal and partner entries are assembled from the exact
    (center, delta) data, so the matrix is correct for deviations far below
    machine epsilon relative to the roots themselves.
    """
    n = state.n_roots
    g = np.zeros((n, n), dtype=complex)
    pl = _pair_lookup(state)
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            if j in pl and k in pl and pl[j][0] is pl[k][0]:
                kk = -(1.0 / np.pi) / (4.0 * pl[j][0].delta * (1.0 + pl[j][0].delta))
            else:
                kk = kernel(state.roots[j] - state.roots[k], 1.0)
            g[j, k] = -TWO_PI * 1j * kk
        g[j, j] = counting_derivative_at_root(state, j) - TWO_PI * 1j * kernel(0.0, 1.0)
    return g


def gaudin_extracted_factors(state):
    """The 2i*delta_a factor per close pair whose inverse scales det G."""
    return [2j * p.delta for p in state.pairs]


def gaudin_norm(state):
    """<state|state> in the C-B pairing, from the norm determinant.

    prod_{j,k}(lam_j - lam_k - i) / prod_{j != k}(lam_j - lam_k) * det G.
    Pair-partner factors in both products come from the exact pair data.
    For self-conjugate root sets this value equals (-1)^N times the
    Hermitian norm squared of the Bethe vector.
    """
    n = state.n_roots
    factors = []
    pl = _pair_lookup(state)
    for j in range(n):
        for k in range(n):
            factors.append(root_minus_i_root(state, j, k))
    num = LogComplex.from_product(factors)
    den_factors = []
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            if j in pl and k in pl and pl[j][0] is pl[k][0]:
                d = pl[j][0].delta
                den_factors.append(1j * (1.0 + 2.0 * d) * (1 if pl[j][1] > 0 else -1))
            else:
                den_factors.append(state.roots[j] - state.roots[k])
    den = LogComplex.from_product(den_factors)
    return num / den * logdet(gaudin_matrix(state))


# ---------------------------------------------------------------------------
# Gaudin extraction and close-pair column handling
# ---------------------------------------------------------------------------

def gaudin_extract(gamma, rhs):
    """F = Gamma^{-1} rhs by pivoted LU with one refinement step.

    Any trailing polynomial columns must be excluded by the caller; they
    pass through the extraction unchanged.
    """
    gamma = np.asarray(gamma, dtype=complex)
    try:
        return lu_solve_refined(gamma, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularGaudin(str(exc)) from exc


def regularized_close_pair_columns(m_g, probe_pairs, ground, probes):
    """Recombine close-pair probe columns of a scalar-product matrix.

    For each pair (k_plus, k_minus) of column indices holding the probe
    values c + i/2 + i delta and c - i/2 - i delta, performs

        col[k_minus] += a_ground(c - i/2 - i delta) * col[k_plus],

    an elementary column operation (determinant unchanged) that removes the
    delta -> 0 divergence of the k_minus column.  Returns a new matrix.
    """
    out = np.array(m_g, dtype=complex, copy=True)
    for (k_plus, k_minus) in probe_pairs:
        a_minus = counting_function(ground, probes[k_minus])
        out[:, k_minus] = out[:, k_minus] + a_minus * out[:, k_plus]
    return out


# ---------------------------------------------------------------------------
# finite-size form factor
# ---------------------------------------------------------------------------

@dataclass
class FormFactorResult:
    """|F_z|^2 with provenance and numerical diagnostics."""

    value: float
    pipeline: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("|F|^2 must be nonnegative")


def _log_q_ratio_products(ground, excited):
    """The two Baxter-ratio products of the finite determinant formula.

    P1 = prod_over_excited q_g(mu_j - i)/q_e(mu_j - i),
    P2 = prod_over_ground  q_e(lam_k - i)/q_g(lam_k - i),
    with pair-partner factors of q_e taken from exact pair data.
    """
    num1, den1 = [], []
    for j in range(excited.n_roots):
        mu = excited.roots[j]
        num1.extend(mu - 1j - ground.roots)
        den1.extend(log_q_shifted_minus_i(excited, j))
    p1 = LogComplex.from_product(num1) / LogComplex.from_product(den1)
    num2, den2 = [], []
    for k in range(ground.n_roots):
        lam = ground.roots[k]
        num2.extend(lam - 1j - excited.roots)
        den2.extend(lam - 1j - ground.roots)
    p2 = LogComplex.from_product(num2) / LogComplex.from_product(den2)
    return p1, p2


def finite_form_factor(ground, excited, classification=None, site_independent=True):
    """|F_z|^2 between the ground state and a triplet-class excited state.

    Assembles the finite-chain determinant representation

        -2 * P1 * P2 * det(S_g)/det(G_g) * det(S_e | W)/det(G_e)

    where S_g probes the ground state at the excited roots plus i/2, S_e
    probes the excited state at the ground roots plus i/2 extended by the
    two polynomial columns, and G are the norm matrices.  Everything is
    combined in log-magnitude/phase arithmetic.

    States in the wrong S^z sector (or classified with total spin != 1)
    short-circuit to an exact selection-rule zero.
    """
    M = ground.M
    diag = {"delta": [complex(p.delta) for p in excited.pairs]}
    if excited.M != M:
        raise ValueError("states live on different chains")
    wrong_sector = excited.n_roots != M // 2 - 1 or ground.n_roots != M // 2
    wrong_spin = classification is not None and classification.spin != 1
    if wrong_sector or wrong_spin:
        diag["selection_rule_zero"] = True
        return FormFactorResult(0.0, "finite", diag)
    if excited.frozen_deviation and excited.pairs:
        diag["frozen_deviation"] = True

    probes_g = np.concatenate([excited.roots, [0.5j]])
    lam_check = np.concatenate([ground.roots, [0.5j]])

    m_g = slavnov_matrix(ground, probes_g)
    g_g = gaudin_matrix(ground)
    m_e = foda_wheeler_matrix(excited, lam_check, ell=2)
    g_e = gaudin_matrix(excited)

    p1, p2 = _log_q_ratio_products(ground, excited)
    combo = LogComplex.from_value(-2.0) * p1 * p2 \
        * logdet(m_g) / logdet(g_g) * logdet(m_e) / logdet(g_e)

    val = combo.value()
    diag.update({
        "phase": complex(combo.phase),
        "imag_fraction": abs(val.imag) / abs(val) if val != 0 else 0.0,
        "log_prefactor": (p1 * p2).logmag,
        "cond_scalar_g": condition_estimate(m_g),
        "cond_scalar_e": condition_estimate(m_e),
        "cond_norm_g": condition_estimate(g_g),
        "cond_norm_e": condition_estimate(g_e),
    })
    diag["ill_conditioned"] = max(
        diag["cond_scalar_g"], diag["cond_scalar_e"],
        diag["cond_norm_g"], diag["cond_norm_e"]) > 1e12
    return FormFactorResult(abs(val), "finite", diag)
