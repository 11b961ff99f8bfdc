"""Independent reference implementations used to pin expected values.

Everything here is deliberately naive: plain midpoint sums, nested 1-D
adaptive quadrature, bisection. Slow and simple on purpose so the main
package can be checked against code that shares none of its structure.
"""

import math

import numpy as np
from scipy.integrate import quad


def midpoint_Ik(y, tau, k, n=1_000_000):
    """Composite-midpoint value of the shrinkage kernel integral.

    Uses the z = u**2 substitution so the k = -1/2 member stays bounded
    at the origin.
    """
    u = (np.arange(n) + 0.5) / n
    w = u ** (2 * k + 1) / (tau * tau + (1.0 - tau * tau) * u * u)
    return 2.0 * float(np.mean(w * np.exp(y * y * u * u / 2.0)))


def _inner_theta_moment(y, lam, tau, j):
    # int theta^j N(y; theta, 1) N(theta; 0, (lam*tau)^2) dtheta
    s2 = (lam * tau) ** 2
    w = s2 / (1.0 + s2)
    mu, sd = w * y, math.sqrt(w)

    def f(th):
        a = np.exp(-0.5 * (y - th) ** 2) / np.sqrt(2 * np.pi)
        b = np.exp(-0.5 * th * th / s2) / np.sqrt(2 * np.pi * s2)
        return th**j * a * b

    lo = mu - 10.0 * sd - 1e-3
    hi = mu + 10.0 * sd + 1e-3
    return quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


def _lambda_mixture_moment(y, tau, j):
    # Outer integral over the half-Cauchy local scale, mapped to a
    # finite interval with lam = tan(psi) so quad sees smooth endpoints.
    def g(psi):
        return _inner_theta_moment(y, math.tan(psi), tau, j) * (2.0 / math.pi)

    return quad(g, 0.0, math.pi / 2.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


def nested_posterior_moments(y, tau):
    """(mean, variance) by brute-force double quadrature over (theta, lam)."""
    n0 = _lambda_mixture_moment(y, tau, 0)
    n1 = _lambda_mixture_moment(y, tau, 1)
    n2 = _lambda_mixture_moment(y, tau, 2)
    mean = n1 / n0
    return mean, n2 / n0 - mean * mean


def nested_posterior_central4(y, tau):
    """Fourth central posterior moment by the same double quadrature."""
    n = [_lambda_mixture_moment(y, tau, j) for j in range(5)]
    mean = n[1] / n[0]
    # E[(theta - mean)^4] expanded in raw moments
    return (
        n[4] / n[0]
        - 4.0 * mean * n[3] / n[0]
        + 6.0 * mean**2 * n[2] / n[0]
        - 3.0 * mean**4
    )


def kappa_bisect(tau, lo=math.sqrt(2.0), hi=10.0, iters=200):
    """Bisection solve of exp(k^2/2)/(k^2/2) = 1/tau on the upper branch."""

    def f(x):
        return math.exp(x * x / 2.0) / (x * x / 2.0) - 1.0 / tau

    if f(lo) > 0 or f(hi) < 0:
        raise ValueError("bracket does not contain the root")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def series_H_half(x, terms=60):
    """Power series for the k = 1/2 exponential-moment ratio at y^2/2 = x."""
    return sum(x**m / (math.factorial(m) * (m + 0.5)) for m in range(terms))


def quad_H(y, k):
    """Direct adaptive quadrature for the incomplete exponential ratio."""
    x = y * y / 2.0
    c = 0.0 if k > 0 else 1.0
    val = quad(
        lambda v: v ** (k - 1) * np.exp(v), c, x, epsabs=1e-14, epsrel=1e-13, limit=400
    )[0]
    return x ** (-k) * val


def grid_mmle(y, n_grid=10_000):
    """Exhaustive-grid maximizer of the marginal likelihood in tau.

    Returns (tau_hat, grid) so callers can check against grid spacing.
    """
    from hsuq.kernels import log_marginal_lik

    n = len(y)
    grid = np.geomspace(1.0 / n, 1.0, n_grid)
    vals = np.array([log_marginal_lik(y, t) for t in grid])
    return float(grid[int(np.argmax(vals))]), grid


def marginal_cdf_quad(t, y, tau):
    """P(theta <= t | y) by quadrature over the shrinkage weight.

    Integrates Phi((t - z*y)/sqrt(z)) against the conditional law of
    z = lam^2 tau^2 / (1 + lam^2 tau^2) on (0, 1), normalized by the
    same midpoint kernel value used elsewhere in this module.
    """
    from scipy.special import ndtr

    def f(u):
        z = u * u
        d = 1.0 / (tau * tau + (1.0 - tau * tau) * z)
        return 2.0 * d * np.exp(y * y * z / 2.0 - y * y / 2.0) * ndtr((t - z * y) / u)

    num = quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=400)[0]
    den = quad(
        lambda u: 2.0
        / (tau * tau + (1.0 - tau * tau) * u * u)
        * np.exp(y * y * u * u / 2.0 - y * y / 2.0),
        0.0,
        1.0,
        epsabs=1e-13,
        epsrel=1e-11,
        limit=400,
    )[0]
    return num / den
