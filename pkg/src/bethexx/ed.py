"""Brute-force finite-chain engine: the ground truth for every determinant.

Works directly in the 2^M spin basis (bit value 1 = down spin, the all-up
ferromagnetic vacuum is index 0).  Monodromy-matrix entries A, B, C, D are
applied by threading a 2-dimensional auxiliary index through M sequential
R-matrix applications, so memory stays O(2^M) and no 4^M operator is ever
materialized.  Intended for M <= 12 (Hamiltonian blocks up to M = 14).

The R-matrix weights at spectral parameter u = lam - i/2 are
a(u) = 1, b(u) = u/(u+i), c(u) = i/(u+i); the B entry is <up|T|down> in the
auxiliary space, which raises the number of down spins by one.
"""

import numpy as np
import scipy.sparse
import scipy.linalg
from dataclasses import dataclass
from itertools import combinations
from math import comb

from .errors import PoleAtArgument, SectorMismatch, SizeLimitExceeded

# Hard ceilings: sparse Hamiltonian blocks and monodromy sweeps stay cheap
# through M = 16 (needed for the spinon-kinematics gap certification); dense
# eigensolves are only sensible to M = 14 (dimension 3432).
MAX_M_MONODROMY = 16
MAX_M_HAMILTONIAN = 16
MAX_M_DENSE = 14

_ENTRY_AUX = {"A": (0, 0), "B": (1, 0), "C": (0, 1), "D": (1, 1)}


@dataclass
class SectorBasis:
    """Bit-pattern basis of the fixed-magnetization sector (M, n_down)."""

    M: int
    n_down: int

    def __post_init__(self):
        if not (0 <= self.n_down <= self.M):
            raise SectorMismatch("n_down out of range")
        states = [sum(1 << p for p in occ)
                  for occ in combinations(range(self.M), self.n_down)]
        self.basis = np.array(sorted(states), dtype=np.int64)

    @property
    def dimension(self):
        return len(self.basis)

    def index_of(self, patterns):
        """Positions of bit patterns in the canonical (ascending) order."""
        idx = np.searchsorted(self.basis, patterns)
        if np.any(self.basis[idx] != patterns):
            raise SectorMismatch("pattern not in sector")
        return idx


@dataclass
class StateVector:
    """Amplitudes over a SectorBasis, ordered like ``sector.basis``."""

    sector: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if len(self.amplitudes) != self.sector.dimension:
            raise ValueError("amplitude length != sector dimension")

    def to_full(self):
        full = np.zeros(1 << self.sector.M, dtype=complex)
        full[self.sector.basis] = self.amplitudes
        return full

    @staticmethod
    def from_full(M, full, n_down):
        sec = SectorBasis(M, n_down)
        return StateVector(sec, full[sec.basis])

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def dot(self, other):
        """Hermitian inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _popcounts(M):
    s = np.arange(1 << M, dtype=np.int64)
    cnt = np.zeros(1 << M, dtype=np.int64)
    for b in range(M):
        cnt += (s >> b) & 1
    return cnt


# ---------------------------------------------------------------------------
# monodromy matrix
# ---------------------------------------------------------------------------

def _apply_r(psi, m, u, M):
    """One R-matrix factor acting on (auxiliary space) x (site m)."""
    bit = 1 << (m - 1)
    s = np.arange(1 << M)
    s1 = s[(s & bit) != 0]
    s0 = s1 ^ bit
    bw = u / (u + 1j)
    cw = 1j / (u + 1j)
    out = np.empty_like(psi)
    out[0, s0] = psi[0, s0]
    out[0, s1] = bw * psi[0, s1] + cw * psi[1, s0]
    out[1, s0] = bw * psi[1, s0] + cw * psi[0, s1]
    out[1, s1] = psi[1, s1]
    return out


def monodromy_apply_full(entry, lam, full, M):
    """Apply one monodromy entry to a full-space vector."""
    if M > MAX_M_MONODROMY:
        raise SizeLimitExceeded("monodromy limited to M <= %d" % MAX_M_MONODROMY)
    u = complex(lam) - 0.5j
    if abs(u + 1j) < 1e-12:
        raise PoleAtArgument("R-matrix pole at lam = -i/2")
    a_in, a_out = _ENTRY_AUX[entry]
    psi = np.zeros((2, 1 << M), dtype=complex)
    psi[a_in] = full
    for m in range(1, M + 1):
        psi = _apply_r(psi, m, u, M)
    return psi[a_out]


def apply_monodromy_entry(entry, lam, v):
    """Monodromy entry on a sector vector; returns the target-sector result.

    B raises n_down by one, C lowers it, A and D preserve it.
    """
    shift = {"A": 0, "D": 0, "B": 1, "C": -1}[entry]
    M = v.sector.M
    out_full = monodromy_apply_full(entry, lam, v.to_full(), M)
    target = v.sector.n_down + shift
    if not (0 <= target <= M):
        # annihilation off the edge sectors, e.g. C(lam)|0> = 0
        assert np.linalg.norm(out_full) < 1e-12 * max(1.0, np.linalg.norm(v.amplitudes))
        return StateVector(SectorBasis(M, v.sector.n_down),
                           np.zeros(v.sector.dimension, dtype=complex))
    return StateVector.from_full(M, out_full, target)


def transfer_apply(lam, v):
    """Transfer matrix A(lam) + D(lam) on a sector vector."""
    M = v.sector.M
    full = v.to_full()
    out = (monodromy_apply_full("A", lam, full, M)
           + monodromy_apply_full("D", lam, full, M))
    return StateVector.from_full(M, out, v.sector.n_down)


def build_bethe_vector(state):
    """B(lam_1) ... B(lam_N) |0>, landing in the n_down = N sector."""
    return bethe_vector_from_roots(state.M, state.roots)


def bethe_vector_from_roots(M, roots):
    """Same as :func:`build_bethe_vector` for a bare (possibly off-shell,
    possibly longer than M/2) list of spectral parameters."""
    if M > MAX_M_MONODROMY:
        raise SizeLimitExceeded("Bethe vectors limited to M <= %d" % MAX_M_MONODROMY)
    full = np.zeros(1 << M, dtype=complex)
    full[0] = 1.0
    for lam in reversed(list(roots)):
        full = monodromy_apply_full("B", lam, full, M)
    return StateVector.from_full(M, full, len(list(roots)))


def dual_contract(xs, v):
    """<0| C(x_1) ... C(x_n) |v>: the C-product functional on a vector.

    This is the algebraic dual pairing (no complex conjugation); it is what
    the scalar-product determinant formulas compute.
    """
    full = v.to_full()
    M = v.sector.M
    for x in reversed(list(xs)):
        full = monodromy_apply_full("C", x, full, M)
    return complex(full[0])


# ---------------------------------------------------------------------------
# local operators and symmetry generators
# ---------------------------------------------------------------------------

def apply_sigma_z(site, v):
    """sigma^z at ``site`` (1-based) on a sector vector."""
    signs = 1.0 - 2.0 * ((v.sector.basis >> (site - 1)) & 1)
    return StateVector(v.sector, v.amplitudes * signs)


def _apply_sigma_pm_full(site, full, M, raise_spin):
    bit = 1 << (site - 1)
    s = np.arange(1 << M)
    out = np.zeros_like(full)
    if raise_spin:      # sigma^+ : down -> up
        src = s[(s & bit) != 0]
        out[src ^ bit] = full[src]
    else:               # sigma^- : up -> down
        src = s[(s & bit) == 0]
        out[src ^ bit] = full[src]
    return out


def apply_sigma_plus(site, v):
    full = _apply_sigma_pm_full(site, v.to_full(), v.sector.M, True)
    return StateVector.from_full(v.sector.M, full, v.sector.n_down - 1)


def apply_sigma_minus(site, v):
    full = _apply_sigma_pm_full(site, v.to_full(), v.sector.M, False)
    return StateVector.from_full(v.sector.M, full, v.sector.n_down + 1)


def apply_s_plus(v):
    """Total raising operator S_+ = sum_m sigma^+_m."""
    M = v.sector.M
    full = v.to_full()
    acc = np.zeros_like(full)
    for m in range(1, M + 1):
        acc += _apply_sigma_pm_full(m, full, M, True)
    return StateVector.from_full(M, acc, v.sector.n_down - 1)


def apply_s_minus(v):
    """Total lowering operator S_- = sum_m sigma^-_m."""
    M = v.sector.M
    full = v.to_full()
    acc = np.zeros_like(full)
    for m in range(1, M + 1):
        acc += _apply_sigma_pm_full(m, full, M, False)
    return StateVector.from_full(M, acc, v.sector.n_down + 1)


def translation_apply(v):
    """Shift every spin one site up (site m -> m+1, periodic)."""
    M = v.sector.M
    s = v.sector.basis
    mask = (1 << M) - 1
    shifted = ((s << 1) | (s >> (M - 1))) & mask
    out = np.zeros_like(v.amplitudes)
    out[v.sector.index_of(shifted)] = v.amplitudes
    return StateVector(v.sector, out)


# ---------------------------------------------------------------------------
# Hamiltonian
# ---------------------------------------------------------------------------

def hamiltonian_sector(M, n_down):
    """Sector block of H = sum_m (sx.sx + sy.sy + sz.sz - 1), periodic.

    Real symmetric CSR matrix over the canonical sector basis.  Each
    anti-aligned bond contributes -2 on the diagonal and a flip term +2.
    """
    if M > MAX_M_HAMILTONIAN:
        raise SizeLimitExceeded("Hamiltonian limited to M <= %d" % MAX_M_HAMILTONIAN)
    if M % 2 != 0:
        raise ValueError("M must be even")
    sec = SectorBasis(M, n_down)
    basis = sec.basis
    dim = sec.dimension
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    for m in range(M):
        b1 = 1 << m
        b2 = 1 << ((m + 1) % M)
        pair = b1 | b2
        anti = ((basis & pair) != 0) & ((basis & pair) != pair)
        diag[anti] += -2.0
        src = np.nonzero(anti)[0]
        flipped = basis[src] ^ pair
        dst = sec.index_of(flipped)
        rows.extend(src)
        cols.extend(dst)
        vals.extend([2.0] * len(src))
    rows.extend(range(dim))
    cols.extend(range(dim))
    vals.extend(diag)
    H = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return H


def sector_eigensystem(M, n_down):
    """Dense eigendecomposition of one magnetization sector (ascending)."""
    if M > MAX_M_DENSE:
        raise SizeLimitExceeded("dense eigensolves limited to M <= %d" % MAX_M_DENSE)
    H = hamiltonian_sector(M, n_down).toarray()
    vals, vecs = scipy.linalg.eigh(H)
    return vals, vecs


def hamiltonian_apply(v):
    H = hamiltonian_sector(v.sector.M, v.sector.n_down)
    return StateVector(v.sector, H @ v.amplitudes)


def eigen_residual(v, energy):
    """|| (H - E) v || / ||v|| for a sector vector."""
    Hv = hamiltonian_apply(v)
    return float(np.linalg.norm(Hv.amplitudes - energy * v.amplitudes)
                 / np.linalg.norm(v.amplitudes))


def match_eigenvector(v, vecs):
    """Index and |overlap| of the eigencolumn closest to ``v``.

    SU(2) multiplets are exactly degenerate, so states are matched by
    maximal overlap rather than by energy ordering.
    """
    amp = v.amplitudes / np.linalg.norm(v.amplitudes)
    ov = np.abs(vecs.conj().T @ amp)
    k = int(np.argmax(ov))
    return k, float(ov[k])


def match_eigenspace(v, vals, vecs, degeneracy_tol=1e-9):
    """Energy and overlap of ``v`` with the closest *degenerate eigenspace*.

    Parity partners and SU(2) multiplets are exactly degenerate, so the
    single-column overlap of a Bethe vector can be 1/sqrt(2) even for a
    perfect eigenstate; the subspace projection is the faithful measure.
    """
    amp = v.amplitudes / np.linalg.norm(v.amplitudes)
    k, _ = match_eigenvector(v, vecs)
    sel = np.abs(vals - vals[k]) < degeneracy_tol * max(1.0, abs(vals[k]))
    proj = vecs[:, sel].conj().T @ amp
    return float(vals[k]), float(np.linalg.norm(proj))


# ---------------------------------------------------------------------------
# form factors
# ---------------------------------------------------------------------------

def direct_form_factor(ground, excited, site=1, operator="z"):
    """Normalized <ground| sigma^a_site |excited> by sparse contraction.

    ``operator`` is one of "z", "+", "-".  Raises SectorMismatch when the
    operator cannot connect the sectors.
    """
    need = {"z": 0, "+": -1, "-": 1}[operator]
    if excited.sector.n_down + need != ground.sector.n_down:
        raise SectorMismatch(
            "sigma^%s cannot connect n_down=%d to n_down=%d"
            % (operator, excited.sector.n_down, ground.sector.n_down))
    if operator == "z":
        w = apply_sigma_z(site, excited)
    elif operator == "+":
        w = apply_sigma_plus(site, excited)
    else:
        w = apply_sigma_minus(site, excited)
    val = ground.dot(w)
    return val / (ground.norm() * excited.norm())


def direct_form_factor_squared(ground, excited, site=1):
    """|<g|sigma^z|e>|^2 / (<g|g><e|e>) for already-built sector vectors."""
    return abs(direct_form_factor(ground, excited, site, "z")) ** 2
