import math

import numpy as np
import pytest

from mgcss import channel as ch
from mgcss._settings import DomainError
from mgcss.cooperative import (
    FusionConfig,
    NodeConfig,
    bsc_flip,
    fusion_metrics,
    optimal_k_exhaustive,
    report_chain,
    sls_detect,
    sls_false_alarm,
)
from mgcss.detector import DetectorConfig, prob_detect_mg, prob_false_alarm
from mgcss.montecarlo import (
    McConfig,
    McEstimate,
    rng_stream,
    simulate_css,
    simulate_node,
    simulate_ter,
    z_score,
)
from mgcss.specfun import binom_sf

RAYLEIGH_10DB = ch.preset("rayleigh", gamma0=10.0)
CFG = DetectorConfig(5, 15.0)


def within(est, analytic, k=3.0):
    return abs(z_score(est.estimate, est.std_error, analytic)) <= k


# --- config and plumbing -----------------------------------------------------

@pytest.mark.parametrize(
    "kw",
    [dict(trials=0), dict(trials=2.5), dict(seed=-1), dict(seed=2**64), dict(mode="exact"), dict(workers=0)],
)
def test_config_rejects(kw):
    with pytest.raises(DomainError):
        McConfig(**kw)


def test_estimate_std_error():
    e = McEstimate.from_counts(250, 1000)
    assert e.estimate == 0.25
    assert e.std_error == pytest.approx(math.sqrt(0.25 * 0.75 / 1000), rel=1e-15)


def test_z_score_edge_cases():
    assert z_score(0.5, 0.0, 0.5) == 0.0
    assert z_score(0.6, 0.0, 0.5) == math.inf
    assert z_score(0.4, 0.1, 0.5) == pytest.approx(-1.0)


def test_streams_reproducible_and_distinct():
    a = rng_stream(42, 7).random(10_000)
    assert np.array_equal(a, rng_stream(42, 7).random(10_000))
    b = rng_stream(42, 8).random(10_000)
    c = rng_stream(43, 7).random(10_000)
    for other in (b, c):
        assert not np.array_equal(a, other)
        # correlation of independent uniforms has sd 1 / sqrt(n)
        assert abs(np.corrcoef(a, other)[0, 1]) < 4 / math.sqrt(a.size)
    assert np.array_equal(rng_stream(1, (2, 3)).random(5), rng_stream(1, (2, 3)).random(5))


def test_bad_hypothesis_and_half_integer_rule():
    node = NodeConfig()
    with pytest.raises(DomainError):
        simulate_node(RAYLEIGH_10DB, CFG, node, "H2", McConfig(10))
    with pytest.raises(DomainError):
        simulate_node(RAYLEIGH_10DB, DetectorConfig(1.3, 4.0), node, "H1", McConfig(10, mode="full_statistic"))
    # half-integer u is a valid chi-square order
    simulate_node(RAYLEIGH_10DB, DetectorConfig(1.5, 4.0), node, "H1", McConfig(10, mode="full_statistic"))


# --- single node -------------------------------------------------------------

@pytest.mark.parametrize("mode", ["semi_analytic", "full_statistic"])
@pytest.mark.parametrize("m", [1, 3])
def test_node_false_alarm(mode, m):
    e = simulate_node(ch.preset("nakagami", m=2.0), CFG, NodeConfig(m), "H0", McConfig(1_000_000, 5, mode))
    assert within(e, sls_false_alarm(prob_false_alarm(CFG), m))


@pytest.mark.parametrize("mode", ["semi_analytic", "full_statistic"])
@pytest.mark.parametrize("m", [1, 3])
def test_node_detection_rayleigh(mode, m):
    e = simulate_node(RAYLEIGH_10DB, CFG, NodeConfig(m), "H1", McConfig(400_000, 11, mode))
    assert within(e, sls_detect(prob_detect_mg(RAYLEIGH_10DB, CFG), m))


def test_node_detection_composite_preset():
    c = ch.preset("rayleigh_lognormal", zeta=1.5, gamma0=ch.db_to_linear(5.0))
    cfg = DetectorConfig(2, 8.0)
    e = simulate_node(c, cfg, NodeConfig(2), "H1", McConfig(400_000, 3))
    assert within(e, sls_detect(prob_detect_mg(c, cfg), 2))


def test_modes_agree():
    c = ch.preset("nakagami_lognormal", m=4.0, zeta=0.5, gamma0=5.0)
    cfg = DetectorConfig(2, 9.0)
    a = simulate_node(c, cfg, NodeConfig(2), "H1", McConfig(300_000, 1, "semi_analytic"))
    b = simulate_node(c, cfg, NodeConfig(2), "H1", McConfig(300_000, 2, "full_statistic"))
    assert abs(a.estimate - b.estimate) <= 3 * math.hypot(a.std_error, b.std_error)


# --- fusion ------------------------------------------------------------------

def test_css_scrambled_reports():
    fusion = FusionConfig(5, 2)
    e = simulate_css(RAYLEIGH_10DB, CFG, NodeConfig(1, 0.5), fusion, "H1", McConfig(200_000, 9))
    assert within(e, binom_sf(1, 5, 0.5))


def test_css_single_node_is_node_plus_flip():
    node = NodeConfig(2, 0.05)
    e = simulate_css(RAYLEIGH_10DB, CFG, node, FusionConfig(1, 1), "H1", McConfig(300_000, 4))
    analytic = bsc_flip(sls_detect(prob_detect_mg(RAYLEIGH_10DB, CFG), 2), 0.05)
    assert within(e, analytic)


def test_css_report_chain_rayleigh_5db():
    c = ch.preset("rayleigh", gamma0=ch.db_to_linear(5.0))
    cfg = DetectorConfig(5, 8.0)
    node = NodeConfig(2, 0.01)
    fusion = FusionConfig(1, 1)
    pf_rep, pd_rep = report_chain(c, cfg, node)
    assert within(simulate_css(c, cfg, node, fusion, "H0", McConfig(300_000, 21)), pf_rep)
    assert within(simulate_css(c, cfg, node, fusion, "H1", McConfig(300_000, 22)), pd_rep)


def test_css_fusion_levels():
    c = ch.preset("nakagami", m=2.0, gamma0=5.0)
    cfg = DetectorConfig(2, 10.0)
    node = NodeConfig(2, 0.02)
    fusion = FusionConfig(6, 3, 0.3, 0.7)
    met = fusion_metrics(*report_chain(c, cfg, node), fusion)
    mc = McConfig(200_000, 17, "full_statistic")
    assert within(simulate_css(c, cfg, node, fusion, "H0", mc), met.q_f)
    assert within(simulate_css(c, cfg, node, fusion, "H1", mc), met.q_d)


def test_ter_estimate():
    c = ch.preset("nakagami", m=2.0, gamma0=5.0)
    cfg = DetectorConfig(2, 10.0)
    node = NodeConfig(1, 0.01)
    fusion = FusionConfig(4, 2, 0.3, 0.7)
    ter = simulate_ter(c, cfg, node, fusion, McConfig(200_000, 8))
    analytic = fusion_metrics(*report_chain(c, cfg, node), fusion).ter
    assert abs(ter.estimate - analytic) <= 3 * ter.std_error


# --- determinism and convergence ---------------------------------------------

def test_parallel_matches_serial():
    node = NodeConfig(2, 0.01)
    fusion = FusionConfig(10, 3)
    base = dict(trials=100_003, seed=42, block_size=4096)
    serial = simulate_css(RAYLEIGH_10DB, CFG, node, fusion, "H1", McConfig(**base, workers=1))
    parallel = simulate_css(RAYLEIGH_10DB, CFG, node, fusion, "H1", McConfig(**base, workers=4))
    assert serial.successes == parallel.successes
    assert serial == parallel


def test_seed_changes_draws():
    a = simulate_node(RAYLEIGH_10DB, CFG, NodeConfig(), "H1", McConfig(50_000, 1))
    b = simulate_node(RAYLEIGH_10DB, CFG, NodeConfig(), "H1", McConfig(50_000, 2))
    assert a.successes != b.successes


def test_error_shrinks_like_inverse_sqrt():
    analytic = prob_false_alarm(CFG)
    node = NodeConfig()
    small, large = [], []
    for rep in range(20):
        e1 = simulate_node(RAYLEIGH_10DB, CFG, node, "H0", McConfig(20_000, 1000 + rep))
        e4 = simulate_node(RAYLEIGH_10DB, CFG, node, "H0", McConfig(80_000, 5000 + rep))
        small.append(abs(e1.estimate - analytic))
        large.append(abs(e4.estimate - analytic))
    ratio = np.mean(large) / np.mean(small)
    # ideal 0.5; the mean of 20 half-normal errors scatters by about 13 %
    assert 0.3 < ratio < 0.8


# --- expensive tier ----------------------------------------------------------

@pytest.mark.expensive
def test_ter_minimum_monte_carlo():
    c = ch.preset("nakagami_lognormal", m=4.0, zeta=0.5, gamma0=10.0)
    node = NodeConfig(1, 0.01)
    best = None
    for lam in np.linspace(0.5, 30.0, 119):
        cfg = DetectorConfig(1, float(lam))
        pf_rep, pd_rep = report_chain(c, cfg, node)
        k, ter = optimal_k_exhaustive(10, pf_rep, pd_rep, 0.3, 0.7)
        if best is None or ter < best[0]:
            best = (ter, k, cfg)
    ter, k, cfg = best
    fusion = FusionConfig(10, k, 0.3, 0.7)
    est = simulate_ter(c, cfg, node, fusion, McConfig(10_000_000, 2024, "full_statistic", workers=4))
    assert abs(est.estimate - ter) <= 3 * est.std_error
