"""Line integrals over the real axis and shifted contours R + i*alpha.

Two integrators are provided:

* :func:`line_nodes` / :func:`integrate_line` -- fixed Gauss-Legendre rule
  on [-L, L] plus 1/u-transformed Gauss-Legendre panels for the two tails,
  so integrands with algebraic 1/x^2 decay are handled to near machine
  accuracy.  Vectorized; used inside matrix builders.
* :func:`integrate_adaptive` -- scipy.quad on real and imaginary parts with
  tight tolerances; used by one-off verification suites.

All integrators accept a contour shift ``alpha``: the integrand is
evaluated at s + i*alpha with s real, which is how every principal-value
prescription in this package is realized (poles are kept strictly off the
contour).
"""

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureFailure

_CACHE = {}


def line_nodes(n_center=400, n_tail=120, cutoff=20.0):
    """Nodes/weights integrating smooth 1/x^2-tailed functions over R.

    The central panel is plain Gauss-Legendre on [-cutoff, cutoff]; each
    tail maps (cutoff, inf) to (0, 1] via x = cutoff/u, du-weighted, which
    turns an algebraic tail into a smooth integrand.
    """
    key = (n_center, n_tail, cutoff)
    if key in _CACHE:
        return _CACHE[key]
    xc, wc = np.polynomial.legendre.leggauss(n_center)
    xc = xc * cutoff
    wc = wc * cutoff
    xu, wu = np.polynomial.legendre.leggauss(n_tail)
    u = 0.5 * (xu + 1.0)          # (0, 1)
    du = 0.5 * wu
    xt = cutoff / u               # (cutoff, inf)
    wt = du * cutoff / u**2
    nodes = np.concatenate([-xt, xc, xt])
    weights = np.concatenate([wt, wc, wt])
    _CACHE[key] = (nodes, weights)
    return nodes, weights


def integrate_line(f, alpha=0.0, n_center=400, n_tail=120, cutoff=20.0):
    """integral of f over R + i*alpha with the fixed composite rule.

    ``f`` must accept a complex numpy array and return array values.
    """
    x, w = line_nodes(n_center, n_tail, cutoff)
    return np.sum(w * f(x + 1j * alpha))


def integrate_adaptive(f, alpha=0.0, epsabs=1e-12, epsrel=1e-12, limit=800):
    """Adaptive integral of a scalar complex integrand over R + i*alpha."""
    def fre(s):
        return f(s + 1j * alpha).real

    def fim(s):
        return f(s + 1j * alpha).imag

    try:
        re, ere = quad(fre, -np.inf, np.inf, epsabs=epsabs, epsrel=epsrel, limit=limit)
        im, eim = quad(fim, -np.inf, np.inf, epsabs=epsabs, epsrel=epsrel, limit=limit)
    except Exception as exc:  # pragma: no cover - scipy internal failures
        raise QuadratureFailure(str(exc)) from exc
    if max(ere, eim) > 1e-7:
        raise QuadratureFailure(
            "quadrature error estimate %.2e above 1e-7" % max(ere, eim))
    return re + 1j * im
