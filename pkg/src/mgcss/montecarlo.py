"""Seeded Monte-Carlo validation of the analytic sensing chain.

Trials are cut into fixed-size blocks and each block draws from its own
PCG64 stream keyed by ``(seed, hypothesis, block)``. Blocks return integer
success counts, so the total is identical whether blocks run serially or
on a thread pool.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from ._settings import DomainError
from .channel import sample

__all__ = [
    "MODES",
    "HYPOTHESES",
    "McConfig",
    "McEstimate",
    "TerEstimate",
    "rng_stream",
    "simulate_node",
    "simulate_css",
    "simulate_ter",
    "z_score",
    "score_z",
]

MODES = ("semi_analytic", "full_statistic")
HYPOTHESES = ("H0", "H1")
_U64 = 2**64


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo settings.

    ``block_size`` fixes the partition of trials into random streams, so
    changing it changes the draws; ``workers`` does not.
    """

    trials: int = 1_000_000
    seed: int = 0
    mode: str = "semi_analytic"
    block_size: int = 1 << 15
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < _U64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.block_size < 1 or self.workers < 1:
            raise DomainError("block_size and workers must be positive")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    std_error: float
    trials: int
    successes: int

    @classmethod
    def from_counts(cls, successes, trials):
        p = successes / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials, successes)


class TerEstimate(NamedTuple):
    estimate: float
    std_error: float
    q_f: McEstimate
    q_d: McEstimate


def z_score(empirical, std_error, analytic):
    """Standardized deviation; exact agreement at zero spread gives 0."""
    diff = empirical - analytic
    if std_error > 0:
        return diff / std_error
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def score_z(est, analytic):
    """z-score with the spread implied by the analytic probability.

    Unlike the plug-in standard error this stays finite when every trial
    agrees, which is the common case for probabilities near 0 or 1.
    """
    p = float(analytic)
    se = math.sqrt(p * (1.0 - p) / est.trials)
    return z_score(est.estimate, se, p)


def rng_stream(seed, stream_id):
    """Independent generator for ``(seed, stream_id)``; ``stream_id`` may be
    an int or a tuple of ints."""
    key = tuple(stream_id) if isinstance(stream_id, tuple) else (int(stream_id),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def _check_hypothesis(h):
    if h not in HYPOTHESES:
        raise DomainError(f"hypothesis must be 'H0' or 'H1', got {h!r}")
    return HYPOTHESES.index(h)


def _dof(cfg, mode):
    dof = 2.0 * cfg.u
    if mode == "full_statistic" and abs(dof - round(dof)) > 1e-12:
        raise DomainError("full_statistic mode needs 2u to be an integer")
    return dof


def _branch_exceed(rng, channel, cfg, shape, hypothesis, mode):
    """Boolean array: did each branch's energy cross the threshold."""
    dof = _dof(cfg, mode)
    snr = sample(channel, rng, size=shape) if hypothesis == "H1" else np.zeros(shape)
    if mode == "semi_analytic":
        if hypothesis == "H1":
            p = stats.ncx2.sf(cfg.lambda_n, dof, 2.0 * snr)
        else:
            p = np.full(shape, stats.chi2.sf(cfg.lambda_n, dof))
        return rng.random(shape) < p
    # full noncentrality on the first of 2u unit-variance components
    z = rng.standard_normal(shape + (int(round(dof)),))
    z[..., 0] += np.sqrt(2.0 * snr)
    return np.einsum("...k,...k->...", z, z) > cfg.lambda_n


def _run_blocks(mc, stream_tag, block_fn):
    n_blocks = -(-mc.trials // mc.block_size)
    sizes = [min(mc.block_size, mc.trials - i * mc.block_size) for i in range(n_blocks)]

    def one(i):
        return int(block_fn(rng_stream(mc.seed, stream_tag + (i,)), sizes[i]))

    if mc.workers == 1 or n_blocks == 1:
        counts = [one(i) for i in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=mc.workers) as pool:
            counts = list(pool.map(one, range(n_blocks)))
    return McEstimate.from_counts(sum(counts), mc.trials)


def simulate_node(channel, cfg, node, hypothesis, mc):
    """Empirical single-node SLS decision rate (before the report channel).

    Under ``H1`` each of the ``M`` branches draws an SNR from the mixture
    model; the node decides 1 if any branch crosses ``lambda_n``.
    """
    h = _check_hypothesis(hypothesis)
    m = node.antennas_m
    _dof(cfg, mc.mode)

    def block(rng, size):
        hit = _branch_exceed(rng, channel, cfg, (size, m), hypothesis, mc.mode)
        return np.count_nonzero(hit.any(axis=-1))

    return _run_blocks(mc, (0, h), block)


def simulate_css(channel, cfg, node, fusion, hypothesis, mc):
    """Empirical fusion-centre decision rate: Q_f under H0, Q_d under H1."""
    h = _check_hypothesis(hypothesis)
    m, n, k, q = node.antennas_m, fusion.nodes_n, fusion.rule_k, node.feedback_q
    _dof(cfg, mc.mode)

    def block(rng, size):
        bits = _branch_exceed(rng, channel, cfg, (size, n, m), hypothesis, mc.mode).any(axis=-1)
        bits ^= rng.random((size, n)) < q
        return np.count_nonzero(bits.sum(axis=-1) >= k)

    return _run_blocks(mc, (1, h), block)


def simulate_ter(channel, cfg, node, fusion, mc):
    """Empirical TER from independent H0 and H1 runs."""
    qf = simulate_css(channel, cfg, node, fusion, "H0", mc)
    qd = simulate_css(channel, cfg, node, fusion, "H1", mc)
    wf, wm = fusion.cost_fa, fusion.cost_miss
    est = wf * qf.estimate + wm * (1.0 - qd.estimate)
    se = math.hypot(wf * qf.std_error, wm * qd.std_error)
    return TerEstimate(est, se, qf, qd)
