"""Cooperative sensing: selection diversity, noisy reporting, k-out-of-N fusion.

Every node picks the strongest of ``M`` i.i.d. branches, sends its one-bit
decision over a binary symmetric channel with crossover ``q``, and the
fusion centre declares the primary user present when at least ``k`` of the
``N`` reports say so. The total error rate (TER) is the Bayesian risk
``W_f * Q_f + W_m * Q_m``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from ._settings import SETTINGS, DomainError
from .detector import prob_detect_mg, prob_false_alarm
from .specfun import as_probability, binom_cdf, binom_pmf, binom_sf

log = logging.getLogger(__name__)

__all__ = [
    "NodeConfig",
    "FusionConfig",
    "SensingMetrics",
    "OptimalM",
    "TerPoint",
    "sls_false_alarm",
    "sls_detect",
    "bsc_flip",
    "reported_probability",
    "fusion_metrics",
    "bayes_risk",
    "risk_profile",
    "is_unimodal",
    "optimal_k_exhaustive",
    "optimal_k_closed",
    "report_chain",
    "node_probabilities",
    "evaluate",
    "d_reported_dM",
    "ter_at",
    "ter_slope",
    "d_risk_dM",
    "optimal_m",
    "ter_sweep",
]


@dataclass(frozen=True)
class NodeConfig:
    antennas_m: int = 1
    feedback_q: float = 0.0

    def __post_init__(self):
        if int(self.antennas_m) != self.antennas_m or self.antennas_m < 1:
            raise DomainError(f"antenna count must be a positive integer, got {self.antennas_m!r}")
        q = as_probability(self.feedback_q)
        if q > 0.5:
            raise DomainError("feedback error probability above 0.5 inverts the reports")
        object.__setattr__(self, "antennas_m", int(self.antennas_m))
        object.__setattr__(self, "feedback_q", q)


@dataclass(frozen=True)
class FusionConfig:
    nodes_n: int
    rule_k: int = 1
    cost_miss: float = 1.0
    cost_fa: float = 1.0

    def __post_init__(self):
        n, k = self.nodes_n, self.rule_k
        if int(n) != n or n < 1:
            raise DomainError(f"node count must be a positive integer, got {n!r}")
        if int(k) != k or not 1 <= k <= n:
            raise DomainError(f"fusion threshold k must lie in [1, {n}], got {k!r}")
        for name in ("cost_miss", "cost_fa"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be non-negative, got {v!r}")
        object.__setattr__(self, "nodes_n", int(n))
        object.__setattr__(self, "rule_k", int(k))

    def with_k(self, k):
        return FusionConfig(self.nodes_n, k, self.cost_miss, self.cost_fa)


@dataclass(frozen=True)
class SensingMetrics:
    """Fusion-level outcome. ``p_f`` and ``p_d`` are the per-node
    probabilities as received at the fusion centre."""

    p_f: float
    p_d: float
    q_f: float
    q_d: float
    q_m: float
    ter: float


def sls_false_alarm(p_f, m):
    """1 - (1 - p_f)^M, the chance that at least one branch crosses."""
    p_f = as_probability(p_f)
    if p_f == 1.0:
        return 1.0
    return as_probability(-math.expm1(m * math.log1p(-p_f)))


def sls_detect(p_d_mg, m):
    return sls_false_alarm(p_d_mg, m)


def bsc_flip(p, q):
    p, q = as_probability(p), as_probability(q)
    return as_probability((1.0 - q) * p + q * (1.0 - p))


def reported_probability(p_branch, m, q):
    """Probability that a node reports 1 given single-branch probability
    ``p_branch``; ``m`` may be real."""
    return bsc_flip(sls_false_alarm(p_branch, m), q)


def fusion_metrics(p_f_rep, p_d_rep, fusion):
    n, k = fusion.nodes_n, fusion.rule_k
    q_f = binom_sf(k - 1, n, p_f_rep)
    q_m = binom_cdf(k - 1, n, p_d_rep)
    q_d = binom_sf(k - 1, n, p_d_rep)
    ter = fusion.cost_fa * q_f + fusion.cost_miss * q_m
    return SensingMetrics(as_probability(p_f_rep), as_probability(p_d_rep), q_f, q_d, q_m, ter)


def bayes_risk(fusion, p_f_rep, p_d_rep):
    """R(k) = W_f - W_f B(k-1; N, P'_f) + W_m B(k-1; N, P'_d)."""
    n, k = fusion.nodes_n, fusion.rule_k
    wf, wm = fusion.cost_fa, fusion.cost_miss
    return wf - wf * binom_cdf(k - 1, n, p_f_rep) + wm * binom_cdf(k - 1, n, p_d_rep)


def risk_profile(n, p_f_rep, p_d_rep, w_m, w_f):
    """Risk for every k = 1..n, as an array indexed by k - 1."""
    return np.array(
        [
            w_f * binom_sf(k - 1, n, p_f_rep) + w_m * binom_cdf(k - 1, n, p_d_rep)
            for k in range(1, n + 1)
        ]
    )


def is_unimodal(values, rtol=1e-12):
    """True if the sequence falls then rises (plateaus allowed)."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    slack = rtol * np.maximum(np.abs(v[:-1]), np.abs(v[1:]))
    rising = d > slack
    if not rising.any():
        return True
    first = int(np.argmax(rising))
    return not np.any(d[first:] < -slack[first:])


def _first_argmin(values, rtol=1e-12):
    """Smallest index whose value is within rounding of the minimum."""
    v = np.asarray(values, dtype=float)
    lo = v.min()
    return int(np.flatnonzero(v <= lo + rtol * abs(lo))[0])


def optimal_k_exhaustive(n, p_f_rep, p_d_rep, w_m, w_f):
    """Fusion threshold with the lowest risk; ties go to the smaller k."""
    risks = risk_profile(n, p_f_rep, p_d_rep, w_m, w_f)
    best = _first_argmin(risks)
    return best + 1, float(risks[best])


def optimal_k_closed(n, p_f_rep, p_d_rep, w_m, w_f):
    """Closed-form optimum from the sign change of R(k+1) - R(k).

    R decreases from k to k+1 exactly while

        k < [ln(W_f/W_m) + N ln((1-P'_f)/(1-P'_d))] / ln[P'_d (1-P'_f) / ((1-P'_d) P'_f)],

    so the optimum is the ceiling of the right-hand side, clamped to [1, N].
    """
    pf, pd = as_probability(p_f_rep), as_probability(p_d_rep)
    if not 0 < pf < pd < 1:
        raise DomainError("closed-form rule needs 0 < P'_f < P'_d < 1")
    if w_m <= 0 or w_f <= 0:
        raise DomainError("costs must be positive")
    num = math.log(w_f / w_m) + n * (math.log1p(-pf) - math.log1p(-pd))
    den = math.log(pd) + math.log1p(-pf) - math.log1p(-pd) - math.log(pf)
    t = num / den
    # an exact tie at integer t belongs to the smaller k
    k = math.ceil(t - 1e-12 * max(1.0, abs(t)))
    return min(max(k, 1), n)


def node_probabilities(channel, cfg, tol=SETTINGS.series_tol):
    """Single-branch (P_f, P_d) of one antenna."""
    return prob_false_alarm(cfg), prob_detect_mg(channel, cfg, tol)


def report_chain(channel, cfg, node, tol=SETTINGS.series_tol):
    """Per-node (P'_f, P'_d) after selection combining and the noisy report."""
    pf, pd = node_probabilities(channel, cfg, tol)
    m, q = node.antennas_m, node.feedback_q
    return reported_probability(pf, m, q), reported_probability(pd, m, q)


def evaluate(channel, cfg, node, fusion):
    return fusion_metrics(*report_chain(channel, cfg, node), fusion)


def d_reported_dM(p_branch, m, q):
    """Derivative of the reported probability with respect to a real M:
    (1 - p)^M (2q - 1) ln(1 - p)."""
    p = as_probability(p_branch)
    if p in (0.0, 1.0):
        raise DomainError("derivative undefined at p = 0 or 1")
    l1p = math.log1p(-p)
    return math.exp(m * l1p) * (2.0 * as_probability(q) - 1.0) * l1p


def ter_at(p_f, p_d, m, q, fusion):
    """TER for single-branch probabilities and a real antenna count ``m``."""
    pf_rep = reported_probability(p_f, m, q)
    pd_rep = reported_probability(p_d, m, q)
    return fusion_metrics(pf_rep, pd_rep, fusion).ter


def ter_slope(p_f, p_d, m, q, fusion):
    """dTER/dM by the chain rule through the binomial tail.

    d/dp P(Bin(N, p) >= k) = N * P(Bin(N - 1, p) = k - 1).
    """
    n, k = fusion.nodes_n, fusion.rule_k
    pf_rep = reported_probability(p_f, m, q)
    pd_rep = reported_probability(p_d, m, q)
    dqf = n * binom_pmf(k - 1, n - 1, pf_rep) * d_reported_dM(p_f, m, q)
    dqm = -n * binom_pmf(k - 1, n - 1, pd_rep) * d_reported_dM(p_d, m, q)
    return fusion.cost_fa * dqf + fusion.cost_miss * dqm


def d_risk_dM(channel, cfg, node, fusion):
    pf, pd = node_probabilities(channel, cfg)
    return ter_slope(pf, pd, node.antennas_m, node.feedback_q, fusion)


@dataclass(frozen=True)
class OptimalM:
    """``m_star`` is the integer argmin of TER over 1..m_max. ``root`` is
    the stationary point of the continuous relaxation nearest to it (None
    without a sign change); ``monotone`` flags a TER still falling at m_max."""

    m_star: int
    ter: float
    root: float = None
    monotone: bool = False
    ters: tuple = field(default=(), repr=False)

    @property
    def root_agrees(self):
        return self.root is None or abs(self.root - self.m_star) <= 1.0


def optimal_m(channel, cfg, q, fusion, m_max=30, probs=None):
    """Antenna count minimizing TER for a fixed feedback error ``q``.

    ``probs`` may carry precomputed single-branch (P_f, P_d) to skip the
    detection series.
    """
    if int(m_max) != m_max or m_max < 1:
        raise DomainError("m_max must be a positive integer")
    pf, pd = probs if probs is not None else node_probabilities(channel, cfg)
    ms = np.arange(1, int(m_max) + 1)
    ters = np.array([ter_at(pf, pd, m, q, fusion) for m in ms])
    best = _first_argmin(ters)
    m_star = int(ms[best])

    root = None
    monotone = False
    if 0.0 < pf < 1.0 and 0.0 < pd < 1.0 and m_max > 1:
        slope = lambda m: ter_slope(pf, pd, m, q, fusion)
        s = np.array([slope(m) for m in ms])
        minima = [i for i in range(len(ms) - 1) if s[i] < 0 <= s[i + 1]]
        roots = [optimize.bisect(slope, ms[i], ms[i + 1], xtol=1e-10) for i in minima]
        if roots:
            root = min(roots, key=lambda r: abs(r - m_star))
        elif np.all(s < 0):
            monotone = True
    if q == 0 and root is None and m_star == m_max:
        monotone = True
    result = OptimalM(m_star, float(ters[best]), root, monotone, tuple(ters))
    if not result.root_agrees:
        log.warning("TER argmin M=%d is not within 1 of the stationary point %.3f", m_star, root)
    return result


class TerPoint(NamedTuple):
    lambda_n: float
    ter: float
    k_used: int


def ter_sweep(channel, u, lambda_grid, node, fusion, rule="optimal"):
    """TER along a threshold grid under a fusion rule.

    ``rule`` is ``"or"`` (k = 1), ``"and"`` (k = N), ``"optimal"`` (the
    exhaustive argmin at each threshold) or ``"fixed"`` (``fusion.rule_k``).
    """
    from .detector import DetectorConfig

    grid = [float(x) for x in lambda_grid]
    if not grid:
        raise DomainError("empty threshold grid")
    if rule not in ("or", "and", "optimal", "fixed"):
        raise DomainError(f"unknown fusion rule {rule!r}")
    n = fusion.nodes_n
    out = []
    for lam in grid:
        pf_rep, pd_rep = report_chain(channel, DetectorConfig(u, lam), node)
        if rule == "optimal":
            k, ter = optimal_k_exhaustive(n, pf_rep, pd_rep, fusion.cost_miss, fusion.cost_fa)
        else:
            k = {"or": 1, "and": n, "fixed": fusion.rule_k}[rule]
            ter = fusion_metrics(pf_rep, pd_rep, fusion.with_k(k)).ter
        out.append(TerPoint(lam, ter, k))
    return out
