"""Born-rule sampling of measurement outcomes and entanglement distributions.

Outcomes are drawn from the vacuum distribution P(a, 0) and carry the
importance weight ``F = P(a,t)/P(a,0)``, so weighted averages are Born-rule
averages at time ``t``. Only the sufficient statistic ``y`` is sampled.

Random numbers come from a counter-based generator: sample ``i`` always uses
Philox counter ``i`` under key ``seed``, so results do not depend on how the
index range is split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from . import kernels
from .errors import CapabilityError, DomainError, UnboundedSupportError, ValidationError
from .model import (
    Dephasing,
    MarkovAmplitudeDamping,
    OUAmplitudeDamping,
    SystemSpec,
    channel_elements,
)
from .propagator import channel_scaling, conditional_norm, outcome_variance

AMPLITUDE_DAMPING = (MarkovAmplitudeDamping, OUAmplitudeDamping)
_U53 = 2.0**-53


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 100_000
    seed: int = 0
    n_workers: int = 1
    n_bins: int = 200
    x_range: Optional[tuple] = None

    def __post_init__(self):
        v = []
        if int(self.n_samples) < 1:
            v.append(("n_samples", "must be >= 1"))
        if int(self.n_workers) < 1:
            v.append(("n_workers", "must be >= 1"))
        if int(self.n_bins) < 1:
            v.append(("n_bins", "must be >= 1"))
        if self.x_range is not None:
            lo, hi = self.x_range
            if not (0 <= lo < hi):
                v.append(("x_range", f"need 0 <= low < high, got {self.x_range}"))
        if not 0 <= int(self.seed) < 2**64:
            v.append(("seed", "must be a 64-bit unsigned integer"))
        if v:
            raise ValidationError(v)


# -- random numbers ----------------------------------------------------------


def _normal_block(seed, start, count):
    """Two standard normals per sample for samples ``start .. start+count-1``."""
    bitgen = np.random.Philox(key=int(seed), counter=[int(start), 0, 0, 0])
    raw = bitgen.random_raw(4 * count).reshape(count, 4)
    u1 = 1.0 - (raw[:, 0] >> np.uint64(11)) * _U53  # in (0, 1]
    u2 = (raw[:, 1] >> np.uint64(11)) * _U53
    r = np.sqrt(-2.0 * np.log(u1))
    phi = 2.0 * math.pi * u2
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


def standard_normals(seed, n, n_workers=1):
    """``(n, 2)`` standard normals; bit-identical for any ``n_workers``."""
    n_workers = max(1, min(int(n_workers), n))
    bounds = np.linspace(0, n, n_workers + 1).astype(int)
    if n_workers == 1:
        return _normal_block(seed, 0, n)
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        parts = list(pool.map(lambda k: _normal_block(seed, bounds[k], bounds[k + 1] - bounds[k]),
                              range(n_workers)))
    return np.concatenate(parts)


# -- outcome sampling --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OutcomeSample:
    y: np.ndarray
    weights: np.ndarray
    t: float


def sample_outcomes(channel, t, config: SamplerConfig, rho_ch=None) -> OutcomeSample:
    """Draw ``y`` from P(a, 0) and attach weights ``F(y, t)`` (ones without ``rho_ch``)."""
    if not isinstance(channel, (MarkovAmplitudeDamping, OUAmplitudeDamping, Dephasing)):
        raise CapabilityError(f"no outcome sampler for {type(channel).__name__}")
    var = outcome_variance(channel, t)
    z = standard_normals(config.seed, int(config.n_samples), config.n_workers)
    if isinstance(channel, Dephasing):
        y = math.sqrt(var) * z[:, 0]
    else:
        y = math.sqrt(var / 2) * (z[:, 0] + 1j * z[:, 1])
    w = np.ones(y.shape) if rho_ch is None else conditional_norm(channel, rho_ch, y, t)
    return OutcomeSample(y, w, float(t))


def entanglement_samples(channel, rho_ch, t, config: SamplerConfig):
    """Normalized entanglement ``x = f/F`` and Born weights ``F`` per sample."""
    s = sample_outcomes(channel, t, config, rho_ch)
    return channel_scaling(channel, t) / s.weights, s.weights


def weighted_mean(x, w):
    """Self-normalized mean, its standard error, and the effective sample size."""
    x = np.asarray(x)
    w = np.asarray(w)
    sw = w.sum()
    mean = float(np.dot(w, x) / sw)
    n_eff = float(sw**2 / np.dot(w, w))
    var = float(np.dot(w, (x - mean) ** 2) / sw)
    return mean, math.sqrt(var / n_eff), n_eff


# -- histograms --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightedHistogram:
    bin_edges: np.ndarray
    weights: np.ndarray  # normalized probability mass per bin
    total_weight: float
    n_eff: float
    mean: float
    mean_stderr: float
    mass_stderr: np.ndarray

    @property
    def density(self):
        return self.weights / np.diff(self.bin_edges)

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


def histogram_from_samples(x, w, bins, x_range):
    lo, hi = x_range
    if not (0 <= lo < hi) or bins < 1:
        raise ValidationError([("binning", f"degenerate binning bins={bins} range={x_range}")])
    raw, edges = np.histogram(x, bins=bins, range=(lo, hi), weights=w)
    w2, _ = np.histogram(x, bins=bins, range=(lo, hi), weights=w * w)
    sw = float(np.sum(w))
    mass = raw / sw
    # Delta-method error of a self-normalized indicator mean.
    se = np.sqrt(np.maximum(w2 * (1 - mass) ** 2 + (np.dot(w, w) - w2) * mass**2, 0)) / sw
    mean, stderr, n_eff = weighted_mean(x, w)
    return WeightedHistogram(edges, mass, sw, n_eff, mean, stderr, se)


def entanglement_histogram(spec: SystemSpec, t, config: SamplerConfig) -> WeightedHistogram:
    """Born-weighted histogram of ``x`` for the single open channel of ``spec``."""
    ch = spec.channel
    rho = spec.rho_channel()
    x, w = entanglement_samples(ch, rho, t, config)
    x_range = config.x_range
    if x_range is None:
        try:
            hi = x_max(ch, rho, _scaled_time(ch, t))
        except UnboundedSupportError:
            hi = float(x.max())
        x_range = (0.0, hi * (1 + 1e-9))
    return histogram_from_samples(x, w, config.n_bins, x_range)


def _scaled_time(channel, t):
    if isinstance(channel, OUAmplitudeDamping):
        return outcome_variance(channel, t)
    return float(kernels.p_of_t(channel, t))


# -- closed forms ------------------------------------------------------------


def _check_p(p, allow_zero=False):
    if not ((0 <= p < 1) if allow_zero else (0 < p < 1)):
        raise DomainError(f"p must lie in {'[0, 1)' if allow_zero else '(0, 1)'}, got {p}")


def _qubit_only(channel):
    if isinstance(channel, Dephasing) and channel.levels is not None and len(channel.levels) != 2:
        raise CapabilityError("closed-form distribution is only available for a qubit target")


def x_max(channel, rho_ch, p=0.0):
    """Upper edge of the support of P_G(x, p)."""
    _qubit_only(channel)
    r11, r10 = channel_elements(rho_ch)
    r00 = 1 - r11
    if isinstance(channel, Dephasing):
        if r11 * r00 <= 0:
            raise UnboundedSupportError("dephasing support is unbounded for a pure coupled qubit")
        return 1.0 / math.sqrt(4 * r11 * r00)
    if not isinstance(channel, AMPLITUDE_DAMPING):
        raise CapabilityError(f"unsupported channel {type(channel).__name__}")
    _check_p(p, allow_zero=True)
    if r11 <= 0:
        raise UnboundedSupportError("amplitude-damping edge diverges for rho11 = 0")
    return math.sqrt(1 - p) / r11 / ((1 - r11 * p) / r11 - abs(r10) ** 2 / r11**2)


def closed_form_pg(channel, rho_ch, x, p):
    """Probability density of the normalized entanglement at scaled time ``p``.

    For OU amplitude damping ``p`` is the outcome variance ``1 - c(t)^2``.
    Returns 0 outside the support.
    """
    _qubit_only(channel)
    _check_p(p)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x must be positive")
    r11, r10 = channel_elements(rho_ch)
    r00 = 1 - r11
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if isinstance(channel, AMPLITUDE_DAMPING):
            if r11 <= 0:
                raise UnboundedSupportError("distribution is a point mass for rho11 = 0")
            c2 = abs(r10) ** 2 / r11**2
            rad = math.sqrt(1 - p) / (r11 * x) - (1 - r11 * p) / r11 + c2
            arg = 2 * abs(r10) / (r11 * p) * np.sqrt(np.maximum(rad, 0))
            expo = -(rad + c2) / p
            out = (1 - p) / (p * r11 * x**3) * np.exp(expo + arg) * special.i0e(arg)
            out = np.where(rad >= 0, out, 0.0)
        elif isinstance(channel, Dephasing):
            lg = -math.log1p(-p)
            s2 = 1 - 4 * x**2 * r11 * r00
            s = np.sqrt(np.maximum(s2, 0))
            terms = 0.0
            for r in (r11, r00):
                if r > 0:
                    terms = terms + np.exp(-np.log((1 + s) / (2 * x * r)) ** 2 / (2 * lg))
            out = np.sqrt((1 - p) / (2 * math.pi * lg)) * terms / (x**2 * s)
            out = np.where(s2 > 0, out, 0.0)
        else:
            raise CapabilityError(f"unsupported channel {type(channel).__name__}")
    return float(out) if out.ndim == 0 else out


def closed_form_bin_masses(channel, rho_ch, edges, p):
    """Probability mass of each bin ``[edges[i], edges[i+1])`` under the closed form."""
    edges = np.asarray(edges, dtype=float)
    try:
        top = x_max(channel, rho_ch, p)
    except UnboundedSupportError:
        top = math.inf
    singular_edge = isinstance(channel, Dephasing)

    def pdf(x):
        return closed_form_pg(channel, rho_ch, x, p) if x > 0 else 0.0

    masses = np.zeros(edges.size - 1)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        b = min(b, top)
        if b <= a:
            continue
        if singular_edge and b == top:
            # Integrable inverse-square-root divergence at the support edge.
            val, _ = integrate.quad(lambda x: pdf(x) * math.sqrt(top - x), a, top,
                                    weight="alg", wvar=(0.0, -0.5), limit=200)
        else:
            val, _ = integrate.quad(pdf, a, b, limit=200, epsabs=1e-13, epsrel=1e-11)
        masses[i] = val
    return masses


# -- distribution distances --------------------------------------------------


def ks_distance_binned(hist_masses, reference_masses):
    """Sup distance between two cumulative distributions sampled at common bin edges."""
    return float(np.max(np.abs(np.cumsum(hist_masses) - np.cumsum(reference_masses))))


def weighted_ks_two_sample(x1, w1, x2, w2):
    """Kolmogorov-Smirnov distance between two weighted empirical distributions."""
    x1, w1, x2, w2 = map(np.asarray, (x1, w1, x2, w2))
    grid = np.sort(np.concatenate([x1, x2]))

    def ecdf(x, w):
        order = np.argsort(x)
        cw = np.cumsum(w[order]) / w.sum()
        idx = np.searchsorted(x[order], grid, side="right")
        return np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)

    return float(np.max(np.abs(ecdf(x1, w1) - ecdf(x2, w2))))


# -- means, tomography and bounds -------------------------------------------


def mean_entanglement(channel, t):
    """Born-rule mean of ``x``; ``sqrt(1 - p(t))`` for qubit channels.

    For OU amplitude damping this is ``exp(-gamma int_0^t Gamma)``, set to 0
    from the disentanglement time on.
    """
    if isinstance(channel, OUAmplitudeDamping):
        tau = kernels.disentanglement_time(channel.gamma, channel.omega_d)
        if tau is not None and t >= tau:
            return 0.0
    return channel_scaling(channel, t)


def tomography_ratio(x_ref, q_ref, n_ref, q_new, n_new):
    """Predict ``x`` at a new outcome from one calibrated outcome and Husimi values."""
    if not (q_ref > 0 and q_new > 0):
        raise DomainError("Husimi values must be positive")
    return x_ref * math.exp(-(n_new - n_ref)) * q_ref / q_new


def entanglement_lower_bound(n_photons, xbar):
    """``exp(-N_a) * xbar``: lower bound on ``x`` at an outcome with N_a mean photons."""
    return math.exp(-n_photons) * xbar
