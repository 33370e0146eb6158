"""Closed-form conditional propagators and the scaling law.

For one open channel the conditional propagator acts on the target
subsystem only and depends on the measurement record through a single
sufficient statistic ``y``:

* Markov amplitude damping: ``U = exp(-gamma t n / 2) exp(y sigma_minus)``
* OU amplitude damping:     ``U = exp(-gamma int Gamma  n) exp(y sigma_minus)``
* dephasing:                ``U = exp(-i H t) exp(-J^2 q(t) + J y)`` (y real)

``F = <psi|psi>`` is the Born-rule ratio P(a,t)/P(a,0) and ``f`` the
scaling function, so that the normalized entanglement is ``x = f / F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from . import kernels
from .errors import CapabilityError, DomainError, NumericalError
from .model import (
    Dephasing,
    MarkovAmplitudeDamping,
    OUAmplitudeDamping,
    SystemSpec,
    apply_local,
    lindblad_operator,
)


@dataclass(frozen=True)
class OutcomePoint:
    """A coherent-state outcome reduced to its sufficient statistic ``y``."""

    y: complex
    t: float
    modes: Optional[np.ndarray] = None

    @classmethod
    def from_modes(cls, channel, couplings, frequencies, a, t):
        y = mode_contraction(channel, couplings, frequencies, a, t)
        return cls(y, t, np.asarray(a, dtype=complex))


@dataclass(frozen=True, eq=False)
class ConditionalState:
    state: np.ndarray
    norm_sq: float
    scaling: float

    @property
    def x(self):
        return self.scaling / self.norm_sq


# -- per-channel building blocks ---------------------------------------------


def _ou_survival(channel: OUAmplitudeDamping, t):
    tau = kernels.disentanglement_time(channel.gamma, channel.omega_d)
    if tau is not None and t >= tau:
        raise DomainError(f"OU propagator is singular for t >= tau = {tau:.12g}")
    return math.exp(-kernels.ou_decay_exponent(channel.gamma, channel.omega_d, t))


def _dephasing_levels(channel: Dephasing):
    nlev = 2 if channel.levels is None else len(channel.levels)
    return np.diag(lindblad_operator(channel, nlev)).real


def channel_scaling(channel, t):
    """Scaling-function factor contributed by one channel; outcome independent."""
    t = float(t)
    if t < 0:
        raise DomainError("t must be >= 0")
    if isinstance(channel, MarkovAmplitudeDamping):
        return math.exp(-0.5 * channel.gamma * t)
    if isinstance(channel, OUAmplitudeDamping):
        return _ou_survival(channel, t)
    if isinstance(channel, Dephasing):
        lam = _dephasing_levels(channel)
        q = kernels.q_of_t(channel.density, t)
        return math.exp(-2.0 / lam.size * float(np.sum(lam**2)) * q)
    raise CapabilityError(f"unsupported channel {type(channel).__name__}")


def outcome_variance(channel, t):
    """Variance of ``y`` under the vacuum outcome distribution P(a, 0).

    Complex ``y`` (amplitude damping) has ``E|y|^2`` equal to this value; real
    ``y`` (dephasing) has this variance.
    """
    if isinstance(channel, MarkovAmplitudeDamping):
        return float(kernels.p_of_t(channel, t))
    if isinstance(channel, OUAmplitudeDamping):
        c = _ou_survival(channel, t)
        return 1.0 - c * c
    if isinstance(channel, Dephasing):
        return float(kernels.q_of_t(channel.density, t))
    raise CapabilityError(f"unsupported channel {type(channel).__name__}")


def local_propagator(channel, y, t, hamiltonian=None):
    """Conditional propagator on the channel's target subsystem."""
    if isinstance(channel, (MarkovAmplitudeDamping, OUAmplitudeDamping)):
        c = channel_scaling(channel, t)
        return np.array([[1.0, y], [0.0, c]], dtype=complex)
    if isinstance(channel, Dephasing):
        if np.iscomplexobj(y) and abs(np.imag(y)) > 0:
            raise DomainError("dephasing outcome statistic must be real")
        lam = _dephasing_levels(channel)
        q = kernels.q_of_t(channel.density, t)
        u = np.exp(-(lam**2) * q + lam * float(np.real(y))).astype(complex)
        if hamiltonian is not None:
            # Validated to be proportional to J, hence diagonal.
            u = u * np.exp(-1j * np.diag(hamiltonian).real * t)
        return np.diag(u)
    raise CapabilityError(f"unsupported channel {type(channel).__name__}")


def conditional_norm(channel, rho_ch, y, t):
    """Vectorised ``F(y, t) = Tr rho_ch U^dag U`` from the initial reduced state."""
    rho = np.asarray(rho_ch, dtype=complex)
    y = np.asarray(y)
    if isinstance(channel, (MarkovAmplitudeDamping, OUAmplitudeDamping)):
        c = channel_scaling(channel, t)
        r11 = rho[1, 1].real
        r10 = rho[1, 0]
        return 1.0 + (c * c - 1.0 + np.abs(y) ** 2) * r11 + 2.0 * np.real(y * r10)
    if isinstance(channel, Dephasing):
        lam = _dephasing_levels(channel)
        q = kernels.q_of_t(channel.density, t)
        pops = np.diag(rho).real
        yr = np.real(y)[..., None]
        return np.sum(pops * np.exp(2 * lam * yr - 2 * lam**2 * q), axis=-1)
    raise CapabilityError(f"unsupported channel {type(channel).__name__}")


# -- conditional states ------------------------------------------------------


def _propagate(spec: SystemSpec, outcome: OutcomePoint, allowed):
    ch = spec.channel
    if not isinstance(ch, allowed):
        raise CapabilityError(f"{type(ch).__name__} is not handled by this propagator")
    h = spec.local_hamiltonians[ch.target] if isinstance(ch, Dephasing) else None
    u = local_propagator(ch, outcome.y, outcome.t, h)
    psi = apply_local(spec.initial, spec.dims, ch.target, u)
    norm_sq = float(np.vdot(psi, psi).real)
    if not norm_sq > 0:
        raise NumericalError("conditional state has zero norm")
    return ConditionalState(psi / math.sqrt(norm_sq), norm_sq, channel_scaling(ch, outcome.t))


def propagate_amplitude_damping(spec, outcome):
    return _propagate(spec, outcome, MarkovAmplitudeDamping)


def propagate_dephasing(spec, outcome):
    return _propagate(spec, outcome, Dephasing)


def propagate_ou(spec, outcome):
    """OU conditional state; valid before the disentanglement time."""
    return _propagate(spec, outcome, OUAmplitudeDamping)


def propagate(spec, outcome):
    return _propagate(spec, outcome, (MarkovAmplitudeDamping, Dephasing, OUAmplitudeDamping))


def scaling_function(spec: SystemSpec, outcome: OutcomePoint) -> float:
    """Product over channels of the per-channel scaling factor."""
    f = 1.0
    for ch in spec.channels:
        f *= channel_scaling(ch, outcome.t)
    return f


def scaling_law_x(spec: SystemSpec, outcome: OutcomePoint) -> float:
    """Normalized conditional entanglement ``x = f P(a,0)/P(a,t) = f / F``."""
    return propagate(spec, outcome).x


# -- mode contraction --------------------------------------------------------


def mode_coefficients(channel, couplings, frequencies, t):
    """Coefficients ``k`` with ``y = sum_l k_l conj(a_l)`` for a discrete bath.

    For dephasing the statistic is the real part of that sum.
    """
    g = np.asarray(couplings, dtype=float)
    w = np.asarray(frequencies, dtype=float)
    if isinstance(channel, MarkovAmplitudeDamping):
        z = 1j * w - 0.5 * channel.gamma
        return math.sqrt(channel.gamma) * g * np.expm1(z * t) / z
    if isinstance(channel, Dephasing):
        safe = np.where(w == 0, 1.0, w)
        return g * np.where(w == 0, t, np.expm1(1j * w * t) / (1j * safe))
    if isinstance(channel, OUAmplitudeDamping):
        def integrand(s):
            return np.exp(1j * w * s) * kernels.ou_c(channel.gamma, channel.omega_d, s)

        val, _ = integrate.quad_vec(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-12)
        return math.sqrt(channel.gamma) * g * val
    raise CapabilityError(f"unsupported channel {type(channel).__name__}")


def mode_contraction(channel, couplings, frequencies, a, t):
    k = mode_coefficients(channel, couplings, frequencies, t)
    y = complex(np.sum(k * np.conj(np.asarray(a, dtype=complex))))
    return y.real if isinstance(channel, Dephasing) else y
