"""Mixture-gamma SNR model, fitted presets and composite-fading oracles.

Each mixture component is a proper gamma density with shape ``beta`` and
scale ``gamma0 / zeta``, weighted by ``alpha``; the weights sum to one, so
the mixture integrates to one. The Nakagami-m row printed as
``alpha = m^m / Gamma(m)`` therefore becomes a single component of weight 1.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats

from ._settings import ConvergenceError, DomainError

__all__ = [
    "MgComponent",
    "MgChannel",
    "CompositeSpec",
    "UnknownPresetError",
    "MissingParameterError",
    "FITTED_PRESETS",
    "TABLE_ROWS",
    "FAMILIES",
    "db_to_linear",
    "pdf",
    "cdf",
    "mean_snr",
    "preset",
    "preset_names",
    "composite_spec_for",
    "sample",
    "composite_pdf_oracle",
    "fit_mse",
]


class UnknownPresetError(ValueError):
    pass


class MissingParameterError(ValueError):
    pass


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class MgComponent:
    alpha: float
    beta: float
    zeta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "zeta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class MgChannel:
    """A mixture-gamma SNR distribution with average SNR ``gamma0`` (linear)."""

    components: tuple
    gamma0: float = 1.0
    label: str = ""
    alphas: np.ndarray = field(init=False, repr=False, compare=False)
    betas: np.ndarray = field(init=False, repr=False, compare=False)
    zetas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DomainError("a channel needs at least one component")
        if not (math.isfinite(self.gamma0) and self.gamma0 > 0):
            raise DomainError(f"gamma0 must be positive, got {self.gamma0!r}")
        total = math.fsum(c.alpha for c in comps)
        if abs(total - 1.0) > 1e-6:
            raise DomainError(f"mixing weights sum to {total}, expected 1")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "alphas", np.array([c.alpha for c in comps]))
        object.__setattr__(self, "betas", np.array([c.beta for c in comps]))
        object.__setattr__(self, "zetas", np.array([c.zeta for c in comps]))

    @property
    def rates(self):
        """Per-component gamma rate ``zeta / gamma0``."""
        return self.zetas / self.gamma0

    def with_gamma0(self, gamma0):
        return replace(self, gamma0=float(gamma0))

    def with_gamma0_db(self, gamma0_db):
        return self.with_gamma0(db_to_linear(gamma0_db))


def _component_log_pdf(channel, x):
    x = np.asarray(x, dtype=float)[..., None]
    b = channel.betas
    r = channel.rates
    return (
        np.log(channel.alphas)
        + b * np.log(r)
        + special.xlogy(b - 1.0, x)
        - r * x
        - special.gammaln(b)
    )


def _check_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr) & ~np.isposinf(arr)) or np.any(arr < 0):
        raise DomainError("SNR argument must be non-negative")
    return arr


def pdf(channel, x):
    """Mixture density at ``x`` (scalar or array)."""
    arr = _check_x(x)
    out = np.exp(_component_log_pdf(channel, arr)).sum(axis=-1)
    return float(out) if arr.ndim == 0 else out


def cdf(channel, x):
    arr = _check_x(x)
    out = np.sum(
        channel.alphas * special.gammainc(channel.betas, channel.rates * arr[..., None]),
        axis=-1,
    )
    out = np.clip(out, 0.0, 1.0)
    return float(out) if arr.ndim == 0 else out


def mean_snr(channel):
    return channel.gamma0 * float(np.sum(channel.alphas * channel.betas / channel.zetas))


# Fitted rows: (alpha, beta, 1/zeta) per component, and the printed MSE.
FITTED_PRESETS = {
    ("lognormal", None, 1.0): (
        [(0.8795306, 21.47391625, 0.04634621), (0.1204694, 19.29669267, 0.06526572)],
        2.18e-4,
    ),
    ("weibull", 4.0, None): (
        [(0.4163066, 2.547627, 0.276866), (0.5836934, 6.410809, 0.1887993)],
        8.14e-5,
    ),
    ("rayleigh", None, None): (
        [(0.2803494, 0.9124631, 0.4795083), (0.7196506, 1.3046339, 0.9339172)],
        None,
    ),
    ("rayleigh_lognormal", None, 1.0): (
        [(0.2889985, 0.9667361, 3.908869), (0.7110015, 0.972492, 1.62796)],
        1.18e-6,
    ),
    ("rayleigh_lognormal", None, 1.5): (
        [(0.7229848, 0.9223047, 0.8351385), (0.2770152, 0.8499458, 3.0324419)],
        None,
    ),
    ("rayleigh_lognormal", None, 0.5): (
        [(0.3491298, 0.9117919, 0.6304104), (0.6508702, 1.225578, 1.010205)],
        1.43e-6,
    ),
    ("nakagami_lognormal", 2.0, 0.5): (
        [(0.6569638, 1.9707105, 0.4273802), (0.3430362, 2.5034565, 0.5267421)],
        1.55e-6,
    ),
    ("nakagami_lognormal", 4.0, 0.5): (
        [(0.7775037, 4.0356456, 0.2247047), (0.2224963, 5.2938705, 0.2556295)],
        3.76e-6,
    ),
}

# One entry per fitted row, in canonical order; Nakagami-m is listed at m = 2.
TABLE_ROWS = [
    ("lognormal", {"zeta": 1.0}),
    ("weibull", {"m": 4.0}),
    ("rayleigh", {}),
    ("nakagami", {"m": 2.0}),
    ("rayleigh_lognormal", {"zeta": 1.0}),
    ("rayleigh_lognormal", {"zeta": 1.5}),
    ("rayleigh_lognormal", {"zeta": 0.5}),
    ("nakagami_lognormal", {"m": 2.0, "zeta": 0.5}),
    ("nakagami_lognormal", {"m": 4.0, "zeta": 0.5}),
]

# parameters each family needs, with the value used when only one row exists
_PRESET_PARAMS = {
    "lognormal": {"zeta": 1.0},
    "weibull": {"m": 4.0},
    "rayleigh": {},
    "nakagami": {"m": None},
    "rayleigh_lognormal": {"zeta": None},
    "nakagami_lognormal": {"m": None, "zeta": 0.5},
}
FAMILIES = tuple(_PRESET_PARAMS)


def preset_names():
    return FAMILIES


def _resolve_params(name, m, zeta):
    if name not in _PRESET_PARAMS:
        raise UnknownPresetError(f"unknown channel preset {name!r}; choose from {FAMILIES}")
    needed = _PRESET_PARAMS[name]
    given = {"m": m, "zeta": zeta}
    out = {"m": None, "zeta": None}
    for key, default in needed.items():
        value = given[key] if given[key] is not None else default
        if value is None:
            raise MissingParameterError(f"preset {name!r} requires --{key}")
        out[key] = float(value)
    return out["m"], out["zeta"]


def _describe(name, m, zeta):
    parts = []
    if m is not None:
        parts.append(f"m={m:g}")
    if zeta is not None:
        parts.append(f"zeta={zeta:g}")
    return f"{name}({', '.join(parts)})" if parts else name


def preset(name, *, m=None, zeta=None, gamma0=1.0):
    """Fitted channel ``name`` at average SNR ``gamma0`` (linear).

    ``zeta`` is the shadowing parameter of the lognormal rows (dB) and ``m``
    the fading figure. Nakagami-m accepts any ``m > 0``; the other families
    only exist at the parameter values tabulated.
    """
    m, zeta = _resolve_params(name, m, zeta)
    label = _describe(name, m, zeta)
    if name == "nakagami":
        if m <= 0:
            raise DomainError(f"Nakagami m must be positive, got {m}")
        comps = (MgComponent(1.0, m, m),)
        return MgChannel(comps, gamma0=float(gamma0), label=label)
    key = (name, m, zeta)
    if key not in FITTED_PRESETS:
        raise UnknownPresetError(f"no fitted row for {label}")
    rows, _ = FITTED_PRESETS[key]
    comps = tuple(MgComponent(a, b, 1.0 / inv_z) for a, b, inv_z in rows)
    return MgChannel(comps, gamma0=float(gamma0), label=label)


def table_mse(name, *, m=None, zeta=None):
    """The published fit MSE for this row, or None."""
    m, zeta = _resolve_params(name, m, zeta)
    entry = FITTED_PRESETS.get((name, m, zeta))
    return None if entry is None else entry[1]


def sample(channel, rng, size=None):
    """Draw SNR values: pick a component by weight, then a gamma variate."""
    p = channel.alphas / channel.alphas.sum()
    idx = rng.choice(len(p), p=p, size=size)
    out = rng.gamma(channel.betas[idx], channel.gamma0 / channel.zetas[idx])
    return float(out) if size is None else out


@dataclass(frozen=True)
class CompositeSpec:
    """True (non-MG) fading law used to validate a preset.

    ``zeta_shadow`` is the lognormal shadowing spread in dB; the shadowed
    local mean is lognormal with the location chosen so that the composite
    mean SNR equals ``gamma0``. For Weibull, ``m`` is the envelope shape, so
    the SNR is Weibull with shape ``m / 2``.
    """

    family: str
    m: float = None
    zeta_shadow: float = None
    gamma0: float = 1.0

    def __post_init__(self):
        need = {
            "rayleigh": (False, False),
            "nakagami": (True, False),
            "weibull": (True, False),
            "lognormal": (False, True),
            "rayleigh_lognormal": (False, True),
            "nakagami_lognormal": (True, True),
        }
        if self.family not in need:
            raise UnknownPresetError(f"unknown fading family {self.family!r}")
        need_m, need_z = need[self.family]
        if need_m != (self.m is not None) or need_z != (self.zeta_shadow is not None):
            raise MissingParameterError(
                f"{self.family} takes m={'yes' if need_m else 'no'}, "
                f"zeta={'yes' if need_z else 'no'}"
            )
        for name in ("m", "zeta_shadow", "gamma0"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v!r}")

    @property
    def sigma_ln(self):
        """Shadowing spread in natural-log units."""
        return self.zeta_shadow * math.log(10.0) / 10.0


def composite_spec_for(name, *, m=None, zeta=None, gamma0=1.0):
    """The composite law a preset approximates, with matching ``gamma0``."""
    m, zeta = _resolve_params(name, m, zeta)
    if name == "rayleigh":
        return CompositeSpec("rayleigh", gamma0=gamma0)
    if name == "lognormal" or name == "rayleigh_lognormal":
        return CompositeSpec(name, zeta_shadow=zeta, gamma0=gamma0)
    if name == "nakagami_lognormal":
        return CompositeSpec(name, m=m, zeta_shadow=zeta, gamma0=gamma0)
    return CompositeSpec(name, m=m, gamma0=gamma0)


def _gamma_pdf(x, shape, scale):
    x = np.asarray(x, dtype=float)
    logp = -special.gammaln(shape) - shape * np.log(scale) + special.xlogy(shape - 1, x) - x / scale
    return np.exp(logp)


def _shadowed(spec, x, nodes):
    t, w = special.roots_hermite(nodes)
    s = spec.sigma_ln
    mu = math.log(spec.gamma0) - 0.5 * s * s
    omega = np.exp(mu + math.sqrt(2.0) * s * t)
    m = 1.0 if spec.family == "rayleigh_lognormal" else spec.m
    vals = _gamma_pdf(x[..., None], m, omega / m)
    return np.sum(w * vals, axis=-1) / math.sqrt(math.pi)


def composite_pdf_oracle(spec, x, nodes=64, tol=1e-8):
    """True SNR density of the composite or simple fading law ``spec``.

    Shadowed families (RL, NL) average the conditional gamma density over
    the lognormal local mean with Gauss-Hermite quadrature. The rule is
    re-evaluated with twice the nodes and :class:`ConvergenceError` raised if
    the two disagree by more than ``tol`` (relative to max(1, value)).
    """
    if nodes < 32:
        raise DomainError("at least 32 Gauss-Hermite nodes are required")
    arr = _check_x(x)
    g0 = spec.gamma0
    fam = spec.family
    if fam == "rayleigh":
        out = np.exp(-arr / g0) / g0
    elif fam == "nakagami":
        out = _gamma_pdf(arr, spec.m, g0 / spec.m)
    elif fam == "weibull":
        k = spec.m / 2.0
        scale = g0 / math.gamma(1.0 + 1.0 / k)
        z = arr / scale
        out = (k / scale) * np.exp(special.xlogy(k - 1, z) - z**k)
    elif fam == "lognormal":
        s = spec.sigma_ln
        mu = math.log(g0) - 0.5 * s * s
        out = stats.lognorm.pdf(arr, s, scale=math.exp(mu))
    else:
        coarse = _shadowed(spec, arr, nodes)
        out = _shadowed(spec, arr, 2 * nodes)
        gap = np.abs(out - coarse) / np.maximum(1.0, np.abs(out))
        if np.any(gap > tol):
            raise ConvergenceError(
                f"Gauss-Hermite shadowing average unstable (gap {np.max(gap):.2e})"
            )
    return float(out) if arr.ndim == 0 else out


def default_mse_grid(gamma0, points=2000):
    """``points`` uniform SNR values on (0, 10 gamma0]; x = 0 is left out
    because components with beta < 1 are unbounded there."""
    return np.linspace(0.0, 10.0 * gamma0, points + 1)[1:]


def fit_mse(channel, spec, grid=None):
    """Mean squared difference between the MG density and the true law."""
    if not math.isclose(channel.gamma0, spec.gamma0, rel_tol=1e-12):
        raise DomainError("channel and composite spec must share gamma0")
    grid = default_mse_grid(channel.gamma0) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty evaluation grid")
    diff = pdf(channel, grid) - composite_pdf_oracle(spec, grid)
    return float(np.mean(diff**2))
