import math

import numpy as np
import pytest
from scipy import integrate, stats

from mgcss import DomainError
from mgcss import channel as ch
from mgcss.channel import (
    CompositeSpec,
    MgChannel,
    MgComponent,
    MissingParameterError,
    UnknownPresetError,
)


def quad_pdf(channel, lo, hi):
    """Adaptive quadrature of the density with an x = t / (1 - t) tail map."""
    if hi == math.inf:
        head, _ = integrate.quad(lambda x: ch.pdf(channel, x), lo, lo + 5 * channel.gamma0, epsabs=1e-13, epsrel=1e-12, limit=400)

        def mapped(t):
            x = lo + 5 * channel.gamma0 + t / (1 - t)
            return ch.pdf(channel, x) / (1 - t) ** 2

        tail, _ = integrate.quad(mapped, 0, 1, epsabs=1e-13, epsrel=1e-12, limit=400)
        return head + tail
    val, _ = integrate.quad(lambda x: ch.pdf(channel, x), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


RAYLEIGH_ALPHA = (0.2803494, 0.7196506)
RAYLEIGH_BETA = (0.9124631, 1.3046339)
RAYLEIGH_INVZ = (0.4795083, 0.9339172)


class TestPresets:
    def test_rl_half(self):
        c = ch.preset("rayleigh_lognormal", zeta=0.5)
        assert [x.alpha for x in c.components] == [0.3491298, 0.6508702]
        assert [x.beta for x in c.components] == [0.9117919, 1.225578]
        assert [1 / x.zeta for x in c.components] == pytest.approx([0.6304104, 1.010205], rel=1e-15)

    def test_nakagami_normalized(self):
        c = ch.preset("nakagami", m=3)
        (comp,) = c.components
        assert comp.alpha == 1.0 and comp.beta == 3.0
        assert 1 / comp.zeta == pytest.approx(1 / 3)

    def test_nl4(self):
        c = ch.preset("nakagami_lognormal", m=4, zeta=0.5)
        assert [x.alpha for x in c.components] == [0.7775037, 0.2224963]
        assert [x.beta for x in c.components] == [4.0356456, 5.2938705]
        assert [1 / x.zeta for x in c.components] == pytest.approx([0.2247047, 0.2556295], rel=1e-15)

    def test_unknown(self):
        with pytest.raises(UnknownPresetError):
            ch.preset("hoyt")
        with pytest.raises(UnknownPresetError):
            ch.preset("rayleigh_lognormal", zeta=0.7)

    def test_missing(self):
        with pytest.raises(MissingParameterError):
            ch.preset("nakagami")
        with pytest.raises(MissingParameterError):
            ch.preset("rayleigh_lognormal")

    def test_weights_must_sum_to_one(self):
        with pytest.raises(DomainError):
            MgChannel((MgComponent(0.5, 1, 1), MgComponent(0.4, 2, 1)))

    def test_component_validation(self):
        with pytest.raises(DomainError):
            MgComponent(1.0, -1.0, 1.0)


class TestDensity:
    def test_nakagami_one_is_exponential(self):
        c = ch.preset("nakagami", m=1, gamma0=2.5)
        for x in (0.0, 0.3, 2.0, 9.0):
            assert ch.pdf(c, x) == pytest.approx(math.exp(-x / 2.5) / 2.5, rel=1e-14)

    def test_zero_when_all_shapes_exceed_one(self):
        assert ch.pdf(ch.preset("weibull", gamma0=3.0), 0.0) == 0.0

    def test_rayleigh_closed_form_and_normalization(self):
        c = ch.preset("rayleigh")
        expected = sum(
            a * (1 / iz) ** b * math.exp(-1 / iz) / math.gamma(b)
            for a, b, iz in zip(RAYLEIGH_ALPHA, RAYLEIGH_BETA, RAYLEIGH_INVZ)
        )
        assert ch.pdf(c, 1.0) == pytest.approx(expected, rel=1e-13)
        assert quad_pdf(c, 0, math.inf) == pytest.approx(1.0, abs=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            ch.pdf(ch.preset("rayleigh"), -0.1)
        with pytest.raises(DomainError):
            ch.cdf(ch.preset("rayleigh"), -0.1)

    @pytest.mark.parametrize("gamma0", [1.0, 3.1622776601683795, 31.622776601683793])
    def test_every_preset_normalizes(self, table_presets, gamma0):
        for c in table_presets.values():
            assert quad_pdf(c.with_gamma0(gamma0), 0, math.inf) == pytest.approx(1.0, abs=1e-6)

    def test_cdf_examples(self):
        c = ch.preset("nakagami", m=1, gamma0=2.0)
        assert ch.cdf(c, 0.0) == 0.0
        assert ch.cdf(c, 2.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
        r = ch.preset("rayleigh")
        assert ch.cdf(r, 1.0) == pytest.approx(quad_pdf(r, 0, 1), abs=1e-8)

    def test_cdf_is_integral_of_pdf(self, table_presets, rng):
        for c in table_presets.values():
            for x in rng.uniform(0, 6, size=50):
                assert ch.cdf(c, x) == pytest.approx(quad_pdf(c, 0, x), abs=1e-8)

    def test_cdf_monotone_and_limits(self, table_presets):
        xs = np.linspace(0, 40, 400)
        for c in table_presets.values():
            v = ch.cdf(c, xs)
            assert v[0] == 0.0 and np.all(np.diff(v) >= 0)
            assert ch.cdf(c, 1e4) == pytest.approx(1.0, abs=1e-12)


class TestMoments:
    def test_examples(self):
        for m in (0.7, 1, 2, 5.5):
            assert ch.mean_snr(ch.preset("nakagami", m=m, gamma0=4.0)) == pytest.approx(4.0, rel=1e-15)
        two = MgChannel((MgComponent(0.5, 1, 1), MgComponent(0.5, 2, 1)))
        assert ch.mean_snr(two) == pytest.approx(1.5)
        assert abs(ch.mean_snr(ch.preset("rayleigh")) - 1.0) <= 0.02

    def test_matches_quadrature(self, table_presets):
        for c in table_presets.values():
            first, _ = integrate.quad(lambda x: x * ch.pdf(c, x), 0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=400)
            assert ch.mean_snr(c) == pytest.approx(first, abs=1e-8)


class TestSampling:
    def test_exponential_mean(self):
        c = ch.preset("nakagami", m=1)
        draws = ch.sample(c, np.random.default_rng(1), size=1_000_000)
        assert abs(draws.mean() - 1.0) <= 3 / math.sqrt(1e6)

    def test_empirical_cdf(self):
        c = ch.preset("rayleigh", gamma0=2.0)
        n = 1_000_000
        draws = ch.sample(c, np.random.default_rng(2), size=n)
        p = ch.cdf(c, 2.0)
        assert abs(np.mean(draws <= 2.0) - p) <= 3 * math.sqrt(p * (1 - p) / n)

    def test_deterministic(self):
        c = ch.preset("nakagami_lognormal", m=2, zeta=0.5)
        a = ch.sample(c, np.random.default_rng(7), size=100)
        b = ch.sample(c, np.random.default_rng(7), size=100)
        assert np.array_equal(a, b)
        assert isinstance(ch.sample(c, np.random.default_rng(7)), float)

    def test_histogram_chi_square(self, table_presets):
        n = 1_000_000
        for i, c in enumerate(table_presets.values()):
            draws = ch.sample(c, np.random.default_rng(100 + i), size=n)
            edges = np.linspace(0, 8 * c.gamma0, 101)
            observed, _ = np.histogram(draws, bins=edges)
            expected = n * np.diff(ch.cdf(c, edges))
            keep = expected >= 5
            # leftover mass (outside the bins or in thin bins) forms one extra cell
            obs = np.append(observed[keep], n - observed[keep].sum())
            exp = np.append(expected[keep], n - expected[keep].sum())
            stat = np.sum((obs - exp) ** 2 / exp)
            pval = stats.chi2.sf(stat, len(obs) - 1)
            assert pval > 0.001, (c.label, pval)


class TestCompositeOracle:
    def test_examples(self):
        assert ch.composite_pdf_oracle(CompositeSpec("rayleigh"), 0.5) == pytest.approx(math.exp(-0.5), rel=1e-15)
        nak = ch.composite_pdf_oracle(CompositeSpec("nakagami", m=4), 1.0)
        assert nak == pytest.approx(4**4 * math.exp(-4) / math.gamma(4), rel=1e-14)
        assert nak == pytest.approx(0.7814672592526583, abs=1e-12)

    def test_node_doubling_stable(self):
        spec = CompositeSpec("rayleigh_lognormal", zeta_shadow=0.5)
        a = ch.composite_pdf_oracle(spec, 1.0, nodes=32)
        b = ch.composite_pdf_oracle(spec, 1.0, nodes=64)
        c = ch.composite_pdf_oracle(spec, 1.0, nodes=128)
        assert abs(a - b) <= 1e-8 and abs(b - c) <= 1e-8

    @pytest.mark.parametrize(
        "spec",
        [
            CompositeSpec("weibull", m=4),
            CompositeSpec("lognormal", zeta_shadow=1.0),
            CompositeSpec("rayleigh_lognormal", zeta_shadow=1.5),
            CompositeSpec("nakagami_lognormal", m=2, zeta_shadow=0.5, gamma0=3.0),
        ],
    )
    def test_oracles_are_densities_with_mean_gamma0(self, spec):
        f = lambda x: ch.composite_pdf_oracle(spec, x)
        mass, _ = integrate.quad(f, 0, np.inf, limit=400)
        mean, _ = integrate.quad(lambda x: x * f(x), 0, np.inf, limit=400)
        assert mass == pytest.approx(1.0, abs=1e-7)
        assert mean == pytest.approx(spec.gamma0, rel=1e-6)

    def test_parameter_presence(self):
        with pytest.raises(MissingParameterError):
            CompositeSpec("nakagami_lognormal", m=2)
        with pytest.raises(MissingParameterError):
            CompositeSpec("rayleigh", m=2)
        with pytest.raises(UnknownPresetError):
            CompositeSpec("rician")


class TestFitMse:
    def test_self_fit_is_zero(self):
        c = ch.preset("nakagami", m=3, gamma0=2.0)
        assert ch.fit_mse(c, CompositeSpec("nakagami", m=3, gamma0=2.0)) <= 1e-20

    @pytest.mark.parametrize(
        "name,kw,printed",
        [
            ("rayleigh_lognormal", {"zeta": 0.5}, 1.43e-6),
            ("nakagami_lognormal", {"m": 2.0, "zeta": 0.5}, 1.55e-6),
            ("nakagami_lognormal", {"m": 4.0, "zeta": 0.5}, 3.76e-6),
            ("weibull", {"m": 4.0}, 8.14e-5),
            ("lognormal", {"zeta": 1.0}, 2.18e-4),
        ],
    )
    def test_order_of_magnitude(self, name, kw, printed):
        mse = ch.fit_mse(ch.preset(name, **kw), ch.composite_spec_for(name, **kw))
        assert printed / 10 <= mse <= printed * 10

    def test_errors(self):
        c = ch.preset("rayleigh")
        with pytest.raises(DomainError):
            ch.fit_mse(c, CompositeSpec("rayleigh", gamma0=2.0))
        with pytest.raises(DomainError):
            ch.fit_mse(c, CompositeSpec("rayleigh"), grid=[])
