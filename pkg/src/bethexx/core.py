"""Scalar building blocks of the spin-1/2 isotropic Heisenberg Bethe ansatz.

A state of the periodic chain with M sites is labelled by complex
rapidities {lam_1, .., lam_N}.  With the monic root polynomial

    q(lam) = prod_j (lam - lam_j)

the exponential counting function is

    a(lam) = ((lam - i/2) / (lam + i/2))**M * q(lam + i) / q(lam - i),

and the on-shell (eigenstate) condition reads a(lam_j) + 1 = 0.  Note that
the q-ratio runs over *all* roots, so the self term contributes an exact
factor -1 relative to the pairwise-product convention that skips k = j.

Energy normalisation corresponds to H = sum_m (sx.sx + sy.sy + sz.sz - 1)
built from Pauli matrices; a single rapidity then carries energy
-2 / (lam**2 + 1/4).  This closed form is pinned against the exact M = 2
and M = 4 diagonalizations in the test suite.

Close pairs (conjugate roots c +- i(1/2 + delta) with exponentially small
delta) destroy naive floating-point evaluation: the factor lam_+ - i - lam_-
equals 2i*delta exactly, and recomputing it from the stored roots loses all
relative accuracy.  States therefore carry the pair data (center, delta)
explicitly and every routine that meets a pair-partner difference uses it.
"""

import numpy as np
from dataclasses import dataclass, field

from .errors import OddHoleCount, PoleAtArgument

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def kernel(x, a=1.0):
    """Lorentzian kernel K_a(x) = (a/pi) / (x^2 + a^2); K = K_1 by default."""
    x = np.asarray(x)
    return (a / np.pi) / (x * x + a * a)


def t_kernel(z):
    """Rational kernel t(z) = i / (z(z+i)) entering the scalar-product matrix.

    Satisfies t(x) + t(-x) = 2*pi*i*K_1(x) and is symmetric under
    z -> -z - i, i.e. t(c - i/2 - lam) = t(lam - c - i/2).  Equivalently
    t(z) = 2*pi*i*K_{1/2}(z + i/2).
    """
    z = np.asarray(z)
    return 1j / (z * (z + 1j))


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass
class ClosePair:
    """Exact parametrization of a conjugate pair c +- i(1/2 + delta).

    ``j_plus``/``j_minus`` index the two members inside ``BetheState.roots``.
    ``delta`` may be complex for quartet halves; it is exactly zero for
    states solved above the deviation-freeze threshold.
    """

    j_plus: int
    j_minus: int
    center: complex
    delta: complex

    @property
    def lam_plus(self):
        return self.center + 1j * (0.5 + self.delta)

    @property
    def lam_minus(self):
        return self.center - 1j * (0.5 + self.delta)


@dataclass(eq=False)
class BetheState:
    """Root multiset of a Bethe state of the length-M chain.

    ``pairs`` holds exact close-pair data produced by the solver; indices in
    it refer to positions in ``roots``.  ``frozen_deviation`` marks states
    whose string deviations were set to exact zero (large-M regime), for
    which downstream code must use regularized formulas.
    """

    M: int
    roots: np.ndarray
    on_shell: bool = False
    max_residual: float = np.inf
    tol: float = 1e-10
    pairs: list = field(default_factory=list)
    frozen_deviation: bool = False

    def __post_init__(self):
        self.roots = np.asarray(self.roots, dtype=complex)
        if self.M % 2 != 0:
            raise ValueError("chain length M must be even")
        if len(self.roots) > self.M // 2:
            raise ValueError("root count exceeds M/2")

    @property
    def n_roots(self):
        return len(self.roots)

    @property
    def sz_sector(self):
        """S^z eigenvalue M/2 - N of the (highest-weight) state."""
        return self.M // 2 - self.n_roots

    def pair_indices(self):
        out = set()
        for p in self.pairs:
            out.add(p.j_plus)
            out.add(p.j_minus)
        return out

    def is_self_conjugate(self, tol=1e-10):
        """Whether the root multiset is closed under complex conjugation."""
        rem = list(self.roots)
        for r in self.roots:
            best, dist = None, np.inf
            for k, s in enumerate(rem):
                d = abs(np.conj(r) - s)
                if d < dist:
                    best, dist = k, d
            if best is None or dist > tol:
                return False
            rem.pop(best)
        return True


# ---------------------------------------------------------------------------
# Baxter polynomial and counting function
# ---------------------------------------------------------------------------

def baxter_q(state, lam):
    """q(lam) = prod_j (lam - lam_j), evaluated as a stable product.

    Accepts scalar or array ``lam``; the empty product (N = 0) is 1.
    """
    lam = np.asarray(lam, dtype=complex)
    if state.n_roots == 0:
        return np.ones_like(lam) if lam.ndim else complex(1.0)
    val = np.prod(lam[..., None] - state.roots, axis=-1)
    return val if lam.ndim else complex(val)


def log_phase_factor(state, lam):
    """M * Log((lam - i/2)/(lam + i/2)) with the principal logarithm.

    Exponentiating reproduces ((lam-i/2)/(lam+i/2))**M without overflow at
    large M; for real lam the ratio is a pure phase and the form is exact.
    lam = i/2 gives -inf (the factor vanishes), which exponentiates to 0.
    """
    lam = np.asarray(lam, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = state.M * np.log((lam - 0.5j) / (lam + 0.5j))
    return np.where(np.isnan(out), -np.inf, out) if np.ndim(out) else (
        -np.inf if np.isnan(out) else out)


def log_counting_function(state, lam, skip=None):
    """log a(lam); ``skip`` omits the factors of the given root indices.

    Built factor-by-factor from principal logarithms, so the imaginary part
    is defined only mod 2*pi -- callers exponentiate or difference it.
    """
    lam = np.asarray(lam, dtype=complex)
    out = log_phase_factor(state, lam)
    for k, r in enumerate(state.roots):
        if skip is not None and k in skip:
            continue
        out = out + np.log(lam - r + 1j) - np.log(lam - r - 1j)
    return out


def counting_function(state, lam, pole_tol=1e-12):
    """Exponential counting function a(lam).

    Raises :class:`PoleAtArgument` when lam - i coincides with a root
    (within ``pole_tol``), where the q-ratio has a pole.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    if state.n_roots:
        dist = np.abs(lam_arr[:, None] - 1j - state.roots[None, :])
        if dist.min() < pole_tol:
            raise PoleAtArgument("lam - i coincides with a Bethe root")
    val = np.exp(log_counting_function(state, lam_arr))
    return val if np.ndim(lam) else complex(val[0])


def counting_log_derivative(state, lam):
    """sigma(lam) = d log a / d lam = 2*pi*i*(M K_{1/2}(lam) - sum_k K(lam - lam_k)).

    For on-shell states a'(lam_j) = -sigma(lam_j); use
    :func:`counting_derivative_at_root` there, which handles close pairs
    without cancellation.
    """
    lam = np.asarray(lam, dtype=complex)
    acc = state.M * kernel(lam, 0.5)
    if state.n_roots:
        acc = acc - np.sum(kernel(lam[..., None] - state.roots, 1.0), axis=-1)
    return TWO_PI * 1j * acc


def _pair_partner_kernel(pair):
    """K_1(lam_+ - lam_-) from the exact pair data: -(1/pi)/(4 delta (1+delta))."""
    d = pair.delta
    return -(1.0 / np.pi) / (4.0 * d * (1.0 + d))


def counting_derivative_at_root(state, j):
    """a'(lam_j) = -sigma(lam_j) for an on-shell state, close-pair safe.

    The partner term K(lam_j - lam_partner) has a simple pole in the string
    deviation; it is evaluated from the stored (center, delta) data so that
    no digits are lost when delta is tiny.
    """
    lam = state.roots[j]
    partner = None
    for p in state.pairs:
        if p.j_plus == j:
            partner = p.j_minus
            pairk = _pair_partner_kernel(p)
        elif p.j_minus == j:
            partner = p.j_plus
            pairk = _pair_partner_kernel(p)
    acc = state.M * kernel(lam, 0.5)
    for k, r in enumerate(state.roots):
        if k == partner:
            acc = acc - pairk
        else:
            acc = acc - kernel(lam - r, 1.0)
    return -TWO_PI * 1j * acc


def bethe_residuals(state):
    """Vector of a(lam_j) + 1 over the roots.

    Generic roots are evaluated with the self-factor replaced by its exact
    value -1; close-pair members use the algebraically cancelled form in
    which the partner factors (lam_+ - i - lam_- = 2i*delta and its mirror)
    are taken from the stored pair data.  For frozen-deviation states the
    pair members report the residual of the pair-product equation, which is
    the quantity the asymptotic solver actually controls.
    """
    res = np.zeros(state.n_roots, dtype=complex)
    pair_of = {}
    for p in state.pairs:
        pair_of[p.j_plus] = (p, +1)
        pair_of[p.j_minus] = (p, -1)
    for j, lam in enumerate(state.roots):
        if j in pair_of:
            p, sign = pair_of[j]
            if state.frozen_deviation:
                res[j] = _pair_product_residual(state, p)
                continue
            res[j] = _pair_member_residual(state, p, sign)
        else:
            logval = log_phase_factor(state, lam)
            for k, r in enumerate(state.roots):
                if k == j:
                    continue
                logval += np.log(lam - r + 1j) - np.log(lam - r - 1j)
            res[j] = 1.0 - np.exp(logval)  # a(lam_j) = -exp(logval)
    return res


def _pair_member_residual(state, pair, sign):
    """a(lam_+-) + 1 with the pair self-factors cancelled symbolically.

    For the + member: a(lam_+) = -[(1+delta)/delta] d(lam_+) P, with P the
    product over non-pair roots; residual = 1 - exp(log of that product).
    """
    d = pair.delta
    lam = pair.lam_plus if sign > 0 else pair.lam_minus
    if sign > 0:
        logval = np.log(1.0 + d) - np.log(d)
    else:
        # a(lam_-) = -[delta/(1+delta)]**? ... by conjugation symmetry the
        # cancelled form mirrors the + member with delta -> delta and the
        # roles of the +-i factors exchanged:
        # q(lam_- + i): partner factor -2i*delta ; q(lam_- - i): -2i(1+delta)
        logval = np.log(d) - np.log(1.0 + d)
    logval = logval + log_phase_factor(state, lam)
    skip = {pair.j_plus, pair.j_minus}
    for k, r in enumerate(state.roots):
        if k in skip:
            continue
        logval += np.log(lam - r + 1j) - np.log(lam - r - 1j)
    return 1.0 - np.exp(logval)


def _pair_product_residual(state, pair):
    """a(lam_+) a(lam_-) - 1 with the singular pair factors cancelled exactly.

    The product of the two member equations is regular even at delta = 0 and
    is the on-shell condition enforced for frozen-deviation states.
    """
    lp, lm = pair.lam_plus, pair.lam_minus
    logval = log_phase_factor(state, lp) + log_phase_factor(state, lm)
    skip = {pair.j_plus, pair.j_minus}
    for k, r in enumerate(state.roots):
        if k in skip:
            continue
        logval += np.log(lp - r + 1j) - np.log(lp - r - 1j)
        logval += np.log(lm - r + 1j) - np.log(lm - r - 1j)
    return np.exp(logval) - 1.0


def transfer_eigenvalue(state, mu, root_tol=1e-9):
    """Transfer-matrix eigenvalue tau(mu) = (a(mu) + 1) q(mu - i) / q(mu).

    The Bethe equations cancel the apparent pole at a root; within
    ``root_tol`` of one, the limit form a'(lam_r) q(lam_r - i)/q'(lam_r)
    is used instead.
    """
    if not state.on_shell:
        raise ValueError("transfer eigenvalue defined for on-shell states")
    mu = complex(mu)
    if state.n_roots:
        dist = np.abs(mu - state.roots)
        r = int(np.argmin(dist))
        if dist[r] < root_tol:
            lam_r = state.roots[r]
            aprime = counting_derivative_at_root(state, r)
            qprime = np.prod(lam_r - np.delete(state.roots, r)) if state.n_roots > 1 else 1.0
            return complex(aprime * baxter_q(state, lam_r - 1j) / qprime)
    a_mu = counting_function(state, mu)
    return complex((a_mu + 1.0) * baxter_q(state, mu - 1j) / baxter_q(state, mu))


# ---------------------------------------------------------------------------
# energy / momentum
# ---------------------------------------------------------------------------

def root_energy(lam):
    """Energy carried by a single rapidity: -2 / (lam^2 + 1/4)."""
    lam = np.asarray(lam, dtype=complex)
    return -2.0 / (lam * lam + 0.25)


def state_energy(state):
    """Total energy sum_j -2/(lam_j^2 + 1/4) (real for self-conjugate sets)."""
    if state.n_roots == 0:
        return 0.0
    e = np.sum(root_energy(state.roots))
    return float(e.real) if abs(e.imag) < 1e-8 * (1 + abs(e)) else e


def momentum_phase(state):
    """Translation eigenvalue tau(i/2) = prod_j (lam_j + i/2)/(lam_j - i/2).

    Returned as an angle in (-pi, pi]; the ferromagnetic vacuum has phase 0.
    """
    ang = 0.0
    for lam in state.roots:
        ang += np.angle((lam + 0.5j) / (lam - 0.5j))
    return wrap_angle(ang)


def wrap_angle(p):
    """Reduce an angle to the interval (-pi, pi]."""
    out = np.remainder(p + np.pi, TWO_PI) - np.pi
    if np.ndim(out) == 0:
        return float(out) if out != -np.pi else np.pi
    out[out == -np.pi] = np.pi
    return out


def spinon_energy_momentum(holes):
    """Energy and momentum carried by an even set of hole rapidities.

    dE = sum_a pi / (2 cosh(pi theta_a)),
    dP = sum_a (arctan(sinh(pi theta_a)) - pi/2), reduced to (-pi, pi].

    The energy is in the conventional J = 1 spin-operator normalisation;
    gaps of the Pauli-matrix Hamiltonian used by the brute-force engine are
    4x larger (see PAULI_ENERGY_SCALE).
    """
    holes = np.asarray(holes, dtype=float)
    if holes.size % 2 != 0:
        raise OddHoleCount("number of holes must be even, got %d" % holes.size)
    de = float(np.sum(np.pi / (2.0 * np.cosh(np.pi * holes))))
    dp = float(np.sum(np.arctan(np.sinh(np.pi * holes)) - np.pi / 2.0))
    return de, wrap_angle(dp)


#: Ratio between gaps of the Pauli-matrix Hamiltonian sum(s.s - 1) and the
#: spinon dispersion above (which uses spin-1/2 operators, J = 1).
PAULI_ENERGY_SCALE = 4.0
