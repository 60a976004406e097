"""Canned sensing scenarios and the sweeps built on them.

A scenario fixes the channel presets, SNR, antennas, feedback error and
fusion costs; the helpers locate TER minima over the detector threshold
and antenna optima over SNR. The time-bandwidth product is left free and
searched over, since the reference configurations never pin it down.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import optimize

from . import channel as ch
from .cooperative import (
    FusionConfig,
    NodeConfig,
    fusion_metrics,
    node_probabilities,
    optimal_k_exhaustive,
    optimal_m,
    report_chain,
)
from .detector import DetectorConfig

__all__ = [
    "Scenario",
    "SCENARIOS",
    "RuleMinimum",
    "threshold_minima",
    "search_u",
    "antenna_sweep",
    "optimal_m_vs_snr",
]

RULES = ("or", "and", "optimal")


@dataclass(frozen=True)
class Scenario:
    channels: tuple  # (label, preset name, preset kwargs)
    gamma0_db: float
    antennas: int = 1
    q: float = 0.01
    nodes: int = 10
    k: int = 3
    w_m: float = 0.3
    w_f: float = 0.7
    lambda_n: float = None
    gamma0_db_grid: tuple = field(default=())

    def preset(self, label, gamma0_db=None):
        for lab, name, kw in self.channels:
            if lab == label:
                g = self.gamma0_db if gamma0_db is None else gamma0_db
                return ch.preset(name, **kw, gamma0=ch.db_to_linear(g))
        raise KeyError(label)

    @property
    def labels(self):
        return tuple(c[0] for c in self.channels)

    @property
    def node(self):
        return NodeConfig(self.antennas, self.q)

    @property
    def fusion(self):
        return FusionConfig(self.nodes, self.k, self.w_m, self.w_f)


NL4 = ("NL", "nakagami_lognormal", {"m": 4.0, "zeta": 0.5})
RL05 = ("RL", "rayleigh_lognormal", {"zeta": 0.5})
WB4 = ("WB", "weibull", {"m": 4.0})
ALL_ROWS = tuple(
    (ch.preset(name, **kw).label, name, kw) for name, kw in ch.TABLE_ROWS
)

SCENARIOS = {
    "ter_10db": Scenario((NL4, RL05), 10.0, antennas=1, w_m=0.3, w_f=0.7),
    "ter_5db_dual": Scenario((NL4, RL05), 5.0, antennas=2, w_m=0.7, w_f=0.3),
    "antennas_5db": Scenario(ALL_ROWS, 5.0, k=3, lambda_n=8.0, w_m=0.3, w_f=0.7),
    "antennas_vs_snr": Scenario(
        (RL05, NL4, WB4), 0.0, k=3, lambda_n=8.0, w_m=0.7, w_f=0.3,
        gamma0_db_grid=tuple(float(x) for x in range(-5, 21)),
    ),
}


class RuleMinimum(NamedTuple):
    rule: str
    ter: float
    lambda_n: float
    k: int


def _ter(channel, u, lam, node, fusion, rule):
    pf_rep, pd_rep = report_chain(channel, DetectorConfig(u, lam), node)
    n = fusion.nodes_n
    if rule == "optimal":
        return optimal_k_exhaustive(n, pf_rep, pd_rep, fusion.cost_miss, fusion.cost_fa)[::-1]
    k = 1 if rule == "or" else n
    return fusion_metrics(pf_rep, pd_rep, fusion.with_k(k)).ter, k


def threshold_minima(channel, u, node, fusion, lambda_max=80.0, points=321, rules=RULES):
    """Minimum TER over lambda_n for each fusion rule.

    A uniform grid brackets the minimum, then a bounded scalar search
    refines it between the neighbouring grid points.
    """
    grid = np.linspace(lambda_max / (points - 1), lambda_max, points)
    out = {}
    for rule in rules:
        vals = np.array([_ter(channel, u, lam, node, fusion, rule)[0] for lam in grid])
        i = int(np.argmin(vals))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
        res = optimize.minimize_scalar(
            lambda lam: _ter(channel, u, lam, node, fusion, rule)[0],
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-6},
        )
        lam = float(res.x) if res.fun < vals[i] else float(grid[i])
        ter, k = _ter(channel, u, lam, node, fusion, rule)
        out[rule] = RuleMinimum(rule, float(ter), lam, int(k))
    return out


def search_u(scenario, label, u_values=range(1, 11), **kw):
    """``{u: threshold_minima(...)}`` for one channel of a scenario."""
    c = scenario.preset(label)
    return {u: threshold_minima(c, u, scenario.node, scenario.fusion, **kw) for u in u_values}


def antenna_sweep(scenario, label, u, q=None, m_max=30):
    """TER against M for one channel at the scenario threshold."""
    q = scenario.q if q is None else q
    c = scenario.preset(label)
    cfg = DetectorConfig(u, scenario.lambda_n)
    return optimal_m(c, cfg, q, scenario.fusion, m_max=m_max)


def optimal_m_vs_snr(scenario, label, u, m_max=100):
    """List of (gamma0_db, OptimalM) over the scenario SNR grid."""
    cfg = DetectorConfig(u, scenario.lambda_n)
    out = []
    for g_db in scenario.gamma0_db_grid:
        c = scenario.preset(label, g_db)
        probs = node_probabilities(c, cfg)
        out.append((g_db, optimal_m(c, cfg, scenario.q, scenario.fusion, m_max=m_max, probs=probs)))
    return out


def with_overrides(scenario, **kw):
    return replace(scenario, **kw)
