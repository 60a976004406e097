"""Scalar special functions used by the detection formulas.

All routines take plain floats, are pure, and hold no module state, so they
can be called from any number of threads.
"""

import math

import numpy as np
from scipy import special

from ._settings import SETTINGS, ConvergenceError, DomainError

__all__ = [
    "as_probability",
    "regularized_upper_gamma",
    "marcum_q",
    "binom_cdf",
    "binom_sf",
    "binom_pmf",
    "kummer_1f1",
]


def _finite(name, value):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def as_probability(p, slack=SETTINGS.prob_slack):
    """Return ``p`` as a float in [0, 1].

    Values within ``slack`` of the interval are clamped onto it; anything
    further out is a bug upstream and raises :class:`DomainError`.
    """
    p = float(p)
    if math.isnan(p) or p < -slack or p > 1.0 + slack:
        raise DomainError(f"not a probability: {p!r}")
    return min(1.0, max(0.0, p))


def regularized_upper_gamma(u, x):
    """Q(u, x) = Gamma(u, x) / Gamma(u) for u > 0, x >= 0."""
    u = float(u)
    x = float(x)
    _finite("u", u)
    _finite("x", x)
    if u <= 0:
        raise DomainError(f"u must be positive, got {u}")
    if x < 0:
        raise DomainError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    return as_probability(special.gammaincc(u, x))


def _poisson_window(mu, tol):
    """Indices [lo, hi] holding all but ``tol`` of the Poisson(mu) mass."""
    half = 0.5 * tol
    mode = int(math.floor(mu))
    # largest lo with P(L <= lo - 1) <= tol/2
    lo_ok, lo_bad = 0, mode + 1
    if mode > 0 and special.pdtr(mode - 1, mu) <= half:
        lo_ok, lo_bad = mode, mode + 1
    while lo_bad - lo_ok > 1:
        mid = (lo_ok + lo_bad) // 2
        if special.pdtr(mid - 1, mu) <= half:
            lo_ok = mid
        else:
            lo_bad = mid
    # smallest hi with P(L > hi) <= tol/2
    step = max(16, int(math.sqrt(mu)) + 1)
    hi_bad, hi_ok = mode - 1, mode + step
    while special.pdtrc(hi_ok, mu) > half:
        hi_bad, hi_ok = hi_ok, hi_ok + 2 * step
        step *= 2
    while hi_ok - hi_bad > 1:
        mid = (hi_ok + hi_bad) // 2
        if special.pdtrc(mid, mu) <= half:
            hi_ok = mid
        else:
            hi_bad = mid
    return lo_ok, hi_ok


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirlerr(n):
    """log(n!) - log(sqrt(2 pi n) (n/e)^n) for integer n >= 1."""
    n = np.asarray(n, dtype=float)
    small = n <= 15
    ns = np.where(small, n, 16.0)
    exact = special.gammaln(ns + 1.0) - (ns + 0.5) * np.log(ns) + ns - _HALF_LOG_2PI
    nl = np.where(small, 16.0, n)
    nn = nl * nl
    series = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - (1 / 1188) / nn) / nn) / nn) / nn) / nl
    return np.where(small, exact, series)


def _bd0(x, m):
    """x log(x/m) + m - x without cancellation when x is close to m."""
    x = np.asarray(x, dtype=float)
    d = x - m
    v = d / (x + m)
    near = np.abs(d) < 0.1 * (x + m)
    s = d * v
    ej = 2.0 * x * v
    v2 = v * v
    acc = s
    # |v| < 0.053 on the near branch, so a handful of terms reaches full precision
    for j in range(1, 40):
        ej = ej * v2
        inc = ej / (2 * j + 1)
        acc = acc + inc
        if np.all(np.abs(inc[near] if inc.ndim else inc) <= 1e-17 * np.abs(acc[near] if acc.ndim else acc)):
            break
    with np.errstate(divide="ignore", invalid="ignore"):
        far = special.xlogy(x, x / m) + m - x
    return np.where(near, acc, far)


def _log_poisson_pmf(k, mu):
    """Saddle-point form of log P(L = k), accurate to a few ulp for large mu."""
    k = np.asarray(k, dtype=float)
    pos = np.where(k > 0, k, 1.0)
    val = -_stirlerr(pos) - _bd0(pos, mu) - _HALF_LOG_2PI - 0.5 * np.log(pos)
    return np.where(k > 0, val, -mu)


def marcum_q(u, a, b, tol=SETTINGS.series_tol, max_terms=SETTINGS.max_terms):
    """Generalized Marcum Q-function Q_u(a, b).

    Evaluated as the Poisson mixture of regularized upper incomplete gamma
    functions::

        Q_u(a, b) = sum_l e^{-a^2/2} (a^2/2)^l / l! * Q(u + l, b^2/2)

    Only the window of ``l`` carrying all but ``tol`` of the Poisson mass is
    summed. Since every gamma ratio lies in [0, 1], the dropped terms add up
    to at most ``tol``.

    Raises:
        DomainError: negative or non-finite arguments, or u <= 0.
        ConvergenceError: the window needs more than ``max_terms`` terms.
    """
    u, a, b = float(u), float(a), float(b)
    for name, v in (("u", u), ("a", a), ("b", b)):
        _finite(name, v)
    if u <= 0:
        raise DomainError(f"u must be positive, got {u}")
    if a < 0 or b < 0:
        raise DomainError("a and b must be non-negative")
    y = 0.5 * b * b
    if y == 0:
        return 1.0
    mu = 0.5 * a * a
    if mu == 0:
        return regularized_upper_gamma(u, y)
    lo, hi = _poisson_window(mu, tol)
    if hi - lo + 1 > max_terms:
        raise ConvergenceError(
            f"marcum_q({u}, {a}, {b}) needs {hi - lo + 1} terms (cap {max_terms})"
        )
    ell = np.arange(lo, hi + 1, dtype=float)
    log_w = _log_poisson_pmf(ell, mu)
    terms = np.exp(log_w) * special.gammaincc(u + ell, y)
    return as_probability(math.fsum(terms))


def _check_binom(k, n, p):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if int(k) != k or k < -1 or k > n:
        raise DomainError(f"k must be an integer in [-1, n], got {k}")
    return int(k), int(n), as_probability(p)


def _log_pmf(j, n, p):
    return (
        special.gammaln(n + 1.0)
        - special.gammaln(j + 1.0)
        - special.gammaln(n - j + 1.0)
        + special.xlogy(j, p)
        + special.xlog1py(n - j, -p)
    )


def binom_pmf(j, n, p):
    """Binomial probability of exactly ``j`` successes in ``n`` trials."""
    _, n, p = _check_binom(min(max(j, -1), n), n, p)
    if j < 0 or j > n:
        return 0.0
    return float(np.exp(_log_pmf(float(j), n, p)))


def binom_cdf(k, n, p):
    """P(X <= k) for X ~ Binomial(n, p), summed in log space.

    ``k = -1`` gives 0 (the empty sum), which is what the fusion formulas
    need for the OR rule.
    """
    k, n, p = _check_binom(k, n, p)
    if k < 0:
        return 0.0
    if k == n:
        return 1.0
    j = np.arange(0, k + 1, dtype=float)
    return as_probability(np.exp(special.logsumexp(_log_pmf(j, n, p))))


def binom_sf(k, n, p):
    """P(X > k), summed directly over the upper tail (no 1 - cdf cancellation)."""
    k, n, p = _check_binom(k, n, p)
    if k < 0:
        return 1.0
    if k == n:
        return 0.0
    j = np.arange(k + 1, n + 1, dtype=float)
    return as_probability(np.exp(special.logsumexp(_log_pmf(j, n, p))))


def _is_nonpositive_int(x):
    return x <= 0 and x == math.floor(x)


def kummer_1f1(a, b, z, tol=SETTINGS.series_tol, max_terms=SETTINGS.max_terms):
    """Confluent hypergeometric function 1F1(a; b; z) for real arguments.

    The power series is summed directly for z >= 0. For z < 0 Kummer's
    transformation ``1F1(a; b; z) = e^z 1F1(b - a; b; -z)`` is applied first,
    which replaces an alternating series by one with a positive argument.
    Summation stops once a geometric bound on the remaining tail falls below
    ``tol`` relative to the running sum.
    """
    a, b, z = float(a), float(b), float(z)
    for name, v in (("a", a), ("b", b), ("z", z)):
        _finite(name, v)
    if _is_nonpositive_int(b):
        raise DomainError(f"1F1 has a pole at b = {b}")
    if z == 0 or a == 0:
        return 1.0
    if z < 0 and not _is_nonpositive_int(a):
        return math.exp(z) * _hyp1f1_series(b - a, b, -z, tol, max_terms)
    return _hyp1f1_series(a, b, z, tol, max_terms)


def _hyp1f1_series(a, b, z, tol, max_terms):
    term = 1.0
    parts = [1.0]
    total = 1.0
    for k in range(max_terms):
        term *= (a + k) * z / ((b + k) * (k + 1))
        if term == 0.0:
            return math.fsum(parts)
        parts.append(term)
        total += term
        # ratio bound for every later term once the Pochhammer factors settle
        j = k + 1
        if b + j > 0 and a + j > 0:
            rho = abs(z) / (j + 1) * max(1.0, (a + j) / (b + j))
            if rho < 1 and abs(term) * rho / (1 - rho) <= tol * abs(total):
                return math.fsum(parts)
    raise ConvergenceError(f"1F1({a}; {b}; {z}) did not converge in {max_terms} terms")
