"""Bath-memory scalar functions.

Time rescalings ``q(t)`` for dephasing, the scaled time ``p(t)``, and the
Ornstein-Uhlenbeck chain ``c(s)``, ``u(s, s')``, ``Gamma(s)`` with the resulting
disentanglement time.

The dephasing rescaling follows the two-sided spectral convention
``q(t) = 2 * int_0^inf I(w) (1 - cos wt) / w**2 dw`` so that a flat spectrum
``I = 1/pi`` gives ``q(t) = t``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import CapabilityError, DomainError, PoleError, ValidationError
from .model import (
    Dephasing,
    Lorentzian,
    MarkovAmplitudeDamping,
    OhmicCutoff,
    OUAmplitudeDamping,
    PurelyOhmic,
    Superohmic,
    lindblad_operator,
)

QUAD_TOL = 1e-10


def _nonneg(t, name="t"):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise DomainError(f"{name} must be finite and >= 0")
    return arr


def _scalar_or_array(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def alpha(density, s):
    """Bath correlation kernel alpha(s) for ``s >= 0``.

    Only the Lorentzian density has a pointwise closed form here; for the
    others use :func:`q_of_t`, which is all the dephasing results need.
    """
    s = _nonneg(s, "s")
    if not isinstance(density, Lorentzian):
        raise CapabilityError(
            f"no pointwise kernel for {type(density).__name__}; use q_of_t for dephasing"
        )
    wd = density.omega_d
    return _scalar_or_array(0.5 * wd * np.exp(-wd * s))


def q_of_t(density, t):
    """Dephasing time rescaling q(t) for the supported spectral densities."""
    t = _nonneg(t)
    if isinstance(density, PurelyOhmic):
        q = t.copy()
    elif isinstance(density, OhmicCutoff):
        wd = density.omega_d
        q = 2 * t / math.pi * np.arctan(wd * t) - np.log1p((wd * t) ** 2) / (math.pi * wd)
    elif isinstance(density, Superohmic):
        wd = density.omega_d
        q = np.log1p((wd * t) ** 2) / (math.pi * wd)
    else:
        raise CapabilityError(f"q(t) is not defined for {type(density).__name__}")
    return _scalar_or_array(q)


def dephasing_rate(channel: Dephasing):
    """``2 Tr J^2``: the coefficient of q(t) in ``p = 1 - exp(-2 Tr J^2 q)``."""
    nlev = 2 if channel.levels is None else len(channel.levels)
    J = lindblad_operator(channel, nlev)
    return 2 * float(np.trace(J @ J).real)


def p_of_t(channel, t):
    """Scaled time p(t) in [0, 1); the variance of the outcome statistic."""
    t = _nonneg(t)
    if isinstance(channel, MarkovAmplitudeDamping):
        p = -np.expm1(-channel.gamma * t)
    elif isinstance(channel, Dephasing):
        p = -np.expm1(-dephasing_rate(channel) * np.asarray(q_of_t(channel.density, t)))
    elif isinstance(channel, OUAmplitudeDamping):
        raise CapabilityError("OU amplitude damping has no p(t); use mean_entanglement")
    else:
        raise CapabilityError(f"unsupported channel {type(channel).__name__}")
    return _scalar_or_array(p)


def time_for_p(channel, p):
    """Inverse of :func:`p_of_t`: the time at which the scaled time reaches ``p``."""
    if not 0 <= p < 1:
        raise DomainError("p must lie in [0, 1)")
    if p == 0:
        return 0.0
    if isinstance(channel, MarkovAmplitudeDamping):
        return -math.log1p(-p) / channel.gamma
    if not isinstance(channel, Dephasing):
        raise CapabilityError(f"no scaled time for {type(channel).__name__}")
    target = -math.log1p(-p) / dephasing_rate(channel)
    if isinstance(channel.density, PurelyOhmic):
        return target
    if isinstance(channel.density, Superohmic):
        wd = channel.density.omega_d
        return math.sqrt(math.expm1(math.pi * wd * target)) / wd
    hi = max(target, 1.0)
    while q_of_t(channel.density, hi) < target:
        hi *= 2
    from scipy.optimize import brentq

    return brentq(lambda t: q_of_t(channel.density, t) - target, 0.0, hi, xtol=1e-14, rtol=1e-14)


# -- Ornstein-Uhlenbeck chain ------------------------------------------------


def _check_rates(gamma, omega_d):
    bad = [(n, v) for n, v in (("gamma", gamma), ("omega_d", omega_d)) if not v > 0]
    if bad:
        raise ValidationError([(n, f"must be positive, got {v}") for n, v in bad])


def _shc(z):
    """sinh(z)/z, continuous through z = 0, for complex z."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 + z * z / 6, np.sinh(safe) / safe)


def _ou_parts(gamma, omega_d, s):
    # One complex-Omega path covers mu < 1, mu = 1 and mu > 1.
    omega = 0.5 * omega_d * np.sqrt(complex(1 - 2 * gamma / omega_d))
    z = omega * np.asarray(s, dtype=float)
    a = (0.5 * omega_d * np.asarray(s) * _shc(z)).real
    b = np.cosh(z).real
    return a, b


def ou_c(gamma, omega_d, s):
    """Solution c(s) of dc/ds = -gamma int_0^s alpha(s-s') c(s') ds', c(0) = 1."""
    _check_rates(gamma, omega_d)
    s = _nonneg(s, "s")
    a, b = _ou_parts(gamma, omega_d, s)
    return _scalar_or_array(np.exp(-0.5 * omega_d * s) * (a + b))


def ou_u(gamma, omega_d, s, s_prime):
    """u(s, s') = c(s') / c(s)."""
    return np.asarray(ou_c(gamma, omega_d, s_prime)) / np.asarray(ou_c(gamma, omega_d, s))


def disentanglement_time(gamma, omega_d):
    """Finite time at which the mean entanglement vanishes, or ``None`` if mu <= 1."""
    _check_rates(gamma, omega_d)
    mu = 2 * gamma / omega_d
    if mu <= 1:
        return None
    r = math.sqrt(mu - 1)
    return mu / r * (math.pi - math.atan(r)) / gamma


def ou_gamma(gamma, omega_d, s):
    """Gamma(s) = int_0^s alpha(s-s') u(s,s') ds' in closed form."""
    _check_rates(gamma, omega_d)
    s = _nonneg(s, "s")
    tau = disentanglement_time(gamma, omega_d)
    if tau is not None and np.any(s >= tau):
        raise PoleError(f"Gamma(s) has a pole at s = tau = {tau:.12g}")
    a, b = _ou_parts(gamma, omega_d, s)
    return _scalar_or_array(a / (a + b))


def ou_decay_exponent(gamma, omega_d, t):
    """gamma * int_0^t Gamma(s) ds by adaptive quadrature (inf at or beyond tau)."""
    _check_rates(gamma, omega_d)
    t = float(_nonneg(t))
    tau = disentanglement_time(gamma, omega_d)
    if tau is not None and t >= tau:
        return math.inf
    val, _ = integrate.quad(
        lambda s: ou_gamma(gamma, omega_d, s), 0.0, t,
        epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400,
    )
    return gamma * val


def spectral_level(density, w):
    """One-sided spectral density I(w) matching the q(t) closed forms."""
    w = np.asarray(w, dtype=float)
    if isinstance(density, PurelyOhmic):
        return np.full_like(w, 1 / math.pi)
    if isinstance(density, OhmicCutoff):
        return np.exp(-w / density.omega_d) / math.pi
    if isinstance(density, Superohmic):
        return w / density.omega_d * np.exp(-w / density.omega_d) / math.pi
    if isinstance(density, Lorentzian):
        wd = density.omega_d
        return wd**2 / (2 * math.pi * (w**2 + wd**2))
    raise CapabilityError(f"unsupported density {type(density).__name__}")


def q_by_quadrature(density, t):
    """``q(t) = 2 int_0^inf I(w) (1 - cos wt) / w^2 dw`` evaluated numerically."""
    t = float(_nonneg(t))
    if t == 0:
        return 0.0
    if isinstance(density, PurelyOhmic):
        raise CapabilityError("flat spectrum has no decaying tail to integrate")

    def integrand(x):
        # substitute w = x / t to keep the oscillation scale fixed
        w = x / t
        return 2 * spectral_level(density, w) * t * (1 - np.cos(x)) / (x * x) if x > 0 else float(
            spectral_level(density, 0.0) * t
        )

    wd = density.omega_d
    edge = 60 * wd * t
    pts = np.arange(0, min(edge, 400 * math.pi), 2 * math.pi)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-12)[0]
    if pts[-1] < edge:
        total += integrate.quad(integrand, pts[-1], edge, epsabs=1e-13, epsrel=1e-12, limit=2000)[0]
    return total
