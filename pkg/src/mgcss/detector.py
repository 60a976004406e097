"""Single-node energy detector: false alarm and fading-averaged detection.

Averaging the Marcum-Q detection probability over one gamma component with
shape ``beta`` and rate ``theta = zeta / gamma0`` gives, term by term,

    P_d = sum_l NB(l; beta, p) * Q(u + l, lambda_n / 2),

where ``NB`` is the negative binomial pmf with success probability
``p = theta / (1 + theta)`` and ``Q`` the regularized upper incomplete gamma
function. The weights sum to one, so the series gives exactly 1 at
``lambda_n = 0``. Because ``Q <= 1``, the negative binomial tail mass
bounds the truncation error from above.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from ._settings import SETTINGS, ConvergenceError, DomainError
from .specfun import as_probability, kummer_1f1, marcum_q, regularized_upper_gamma

__all__ = [
    "DetectorConfig",
    "SeriesResult",
    "RocPoint",
    "prob_false_alarm",
    "prob_detect_awgn",
    "series_terms",
    "partial_sum",
    "truncation_bound",
    "prob_detect_mg_series",
    "prob_detect_mg",
    "prob_detect_mg_quadrature",
    "prob_detect_mg_laguerre",
    "prob_detect_mg_integer",
    "roc_sweep",
]


@dataclass(frozen=True)
class DetectorConfig:
    """Time-bandwidth product ``u`` and threshold normalized by noise power."""

    u: float
    lambda_n: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and self.u > 0):
            raise DomainError(f"u must be positive, got {self.u!r}")
        if not (math.isfinite(self.lambda_n) and self.lambda_n >= 0):
            raise DomainError(f"lambda_n must be non-negative, got {self.lambda_n!r}")

    def with_lambda(self, lambda_n):
        return DetectorConfig(self.u, float(lambda_n))


@dataclass(frozen=True)
class SeriesResult:
    value: float
    terms_used: int
    tail_bound: float


class RocPoint(NamedTuple):
    lambda_n: float
    p_f: float
    p_d: float
    p_m: float


def prob_false_alarm(cfg):
    """Channel-independent false-alarm probability Q(u, lambda_n / 2)."""
    return regularized_upper_gamma(cfg.u, 0.5 * cfg.lambda_n)


def prob_detect_awgn(cfg, gamma, tol=SETTINGS.series_tol):
    """Detection probability at instantaneous SNR ``gamma``."""
    if not gamma >= 0:
        raise DomainError(f"SNR must be non-negative, got {gamma!r}")
    return marcum_q(cfg.u, math.sqrt(2.0 * gamma), math.sqrt(cfg.lambda_n), tol=tol)


def _nb_logs(channel):
    theta = channel.rates
    log_s = -np.log1p(theta)  # failure probability 1 / (1 + theta)
    log_p = np.log(theta) + log_s
    return log_p, log_s


def series_terms(channel, cfg, n):
    """Weighted series terms ``l = 0..n``, shape (components, n + 1)."""
    ell = np.arange(n + 1, dtype=float)
    log_p, log_s = _nb_logs(channel)
    b = channel.betas[:, None]
    log_nb = (
        special.gammaln(b + ell)
        - special.gammaln(b)
        - special.gammaln(ell + 1.0)
        + b * log_p[:, None]
        + ell * log_s[:, None]
    )
    ratio = special.gammaincc(cfg.u + ell, 0.5 * cfg.lambda_n)
    return channel.alphas[:, None] * np.exp(log_nb) * ratio


def partial_sum(channel, cfg, n):
    return math.fsum(series_terms(channel, cfg, n).ravel())


def truncation_bound(channel, cfg, n):
    """Upper bound on the error of stopping the series after term ``n``.

    Each dropped term is a negative binomial weight times a gamma ratio no
    larger than one, so the bound is the weighted negative binomial tail
    ``sum_k alpha_k P(L_k > n)``, evaluated in closed form through the
    regularized incomplete beta function.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    s = 1.0 / (1.0 + channel.rates)
    return float(np.sum(channel.alphas * special.betainc(n + 1.0, channel.betas, s)))


def prob_detect_mg_series(channel, cfg, tol=SETTINGS.series_tol, max_terms=SETTINGS.max_terms):
    """Fading-averaged detection probability from the infinite series.

    The number of terms is the smallest ``n + 1`` whose truncation bound is
    at most ``tol``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if cfg.lambda_n == 0:
        # every gamma ratio is one and the weights sum to one exactly
        return SeriesResult(1.0, 1, 0.0)
    last = max_terms - 1
    if truncation_bound(channel, cfg, last) > tol:
        raise ConvergenceError(
            f"series for {channel.label or 'channel'} needs more than {max_terms} terms"
        )
    lo, hi = -1, last
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if truncation_bound(channel, cfg, mid) <= tol:
            hi = mid
        else:
            lo = mid
    value = as_probability(partial_sum(channel, cfg, hi))
    return SeriesResult(value, hi + 1, truncation_bound(channel, cfg, hi))


def prob_detect_mg(channel, cfg, tol=SETTINGS.series_tol):
    """Shorthand for the series value."""
    return prob_detect_mg_series(channel, cfg, tol).value


def _component_quad(g, beta, rate, lambda_n, tol):
    log_norm = beta * math.log(rate) - special.gammaln(beta)
    mean = beta / rate
    sd = math.sqrt(beta) / rate
    upper = mean + 12.0 * sd
    kw = dict(epsabs=tol, epsrel=0.0, limit=500)

    def dens(x):
        return math.exp(log_norm + (beta - 1.0) * math.log(x) - rate * x)

    total = 0.0
    start = 0.0
    if beta < 1.0:
        # x^(beta-1) endpoint singularity goes into the quadrature weight
        start = 0.5 * mean
        val, _ = integrate.quad(
            lambda x: g(x) * math.exp(log_norm - rate * x),
            0.0, start, weight="alg", wvar=(beta - 1.0, 0.0), **kw,
        )
        total += val
    pts = [p for p in (mean - 4 * sd, mean, mean + 4 * sd, 0.5 * lambda_n) if start < p < upper]
    val, _ = integrate.quad(lambda x: g(x) * dens(x) if x > 0 else 0.0, start, upper, points=pts or None, **kw)
    total += val

    # g is non-decreasing in SNR, so the tail lies between g(upper) * mass and mass
    mass = special.gammaincc(beta, rate * upper)
    spread = (1.0 - g(upper)) * mass
    if spread <= tol:
        return total + mass - 0.5 * spread

    # tail: x = upper - ln(v) / rate maps [upper, inf) onto (0, 1]
    def tail(v):
        if v <= 0.0:
            return 0.0
        x = upper - math.log(v) / rate
        return g(x) * math.exp(log_norm - rate * upper + (beta - 1.0) * math.log(x)) / rate

    val, _ = integrate.quad(tail, 0.0, 1.0, **kw)
    return total + val


def prob_detect_mg_quadrature(channel, cfg, tol=SETTINGS.quad_tol):
    """Reference value: adaptive quadrature of the AWGN detection
    probability against the mixture density.

    Each component is split into a head (with the algebraic singularity
    moved into the quadrature weight when ``beta < 1``), a body with break
    points at the mean and at the detector threshold, and an exponentially
    mapped tail.
    """
    if cfg.lambda_n == 0:
        return 1.0

    def g(x):
        return prob_detect_awgn(cfg, x, tol=1e-15)

    parts = [
        a * _component_quad(g, b, r, cfg.lambda_n, 0.25 * tol / len(channel.alphas))
        for a, b, r in zip(channel.alphas, channel.betas, channel.rates)
    ]
    return as_probability(math.fsum(parts))


def prob_detect_mg_laguerre(channel, cfg, nodes=160):
    """Second, independent quadrature rule: generalized Gauss-Laguerre with
    the gamma weight ``t^(beta-1) e^-t`` absorbed exactly per component."""
    total = []
    for a, b, r in zip(channel.alphas, channel.betas, channel.rates):
        t, w = special.roots_genlaguerre(nodes, b - 1.0)
        g = np.array([prob_detect_awgn(cfg, ti / r, tol=1e-15) for ti in t])
        total.append(a * math.fsum(w * g) / special.gamma(b))
    return as_probability(math.fsum(total))


def prob_detect_mg_integer(channel, cfg, tol=SETTINGS.series_tol):
    """Finite closed form for mixtures whose shapes are all integers.

    With ``y = lambda_n / 2``, ``s = 1 / (1 + theta)`` and ``p = 1 - s``, a
    component of integer shape ``beta`` contributes

        Q(u, y) + e^-y y^u / Gamma(u + 1) * sum_{i<beta} p^i s 1F1(i + 1; u + 1; y s).

    This follows from writing the negative binomial tail as a finite sum
    and summing the remaining Poisson-type series into 1F1. The often-quoted
    version of this formula has mistyped coefficients (a ``lambda^(4u)``
    power, ``u!`` for ``Gamma(u + 1)`` and ``theta^-(beta-1)`` for
    ``theta^i``); the coefficients here are the ones the quadrature
    reference confirms.
    """
    shapes = np.rint(channel.betas)
    if np.any(np.abs(channel.betas - shapes) > 1e-9):
        raise DomainError("integer form requires integer shape parameters")
    y = 0.5 * cfg.lambda_n
    pf = regularized_upper_gamma(cfg.u, y)
    if y == 0:
        return 1.0
    log_lead = -y + cfg.u * math.log(y) - special.gammaln(cfg.u + 1.0)
    parts = [pf]
    for a, beta, theta in zip(channel.alphas, shapes.astype(int), channel.rates):
        log_s = -math.log1p(theta)
        log_p = math.log(theta) + log_s
        z = y * math.exp(log_s)
        for i in range(beta):
            coef = math.exp(log_lead + i * log_p + log_s)
            parts.append(a * coef * kummer_1f1(i + 1, cfg.u + 1, z, tol=tol * 1e-3))
    return as_probability(math.fsum(parts))


def roc_sweep(channel, u, lambda_grid, tol=SETTINGS.series_tol):
    """Complementary ROC points (P_f, P_d, P_m) along a threshold grid."""
    grid = [float(x) for x in lambda_grid]
    if not grid:
        raise DomainError("empty threshold grid")
    out = []
    for lam in grid:
        cfg = DetectorConfig(u, lam)
        pf = prob_false_alarm(cfg)
        pd = prob_detect_mg(channel, cfg, tol)
        out.append(RocPoint(lam, pf, pd, 1.0 - pd))
    return out
