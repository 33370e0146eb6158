"""Brute-force discrete-mode validator.

A handful of bosonic modes in a truncated Fock space couple to one subsystem
through ``H_I(s) = i sum_l g_l (J a_l^dag e^{i w_l s} - J^dag a_l e^{-i w_l s})``
(bath in the interaction picture, local Hamiltonians kept in the Schrodinger
picture). The joint state is integrated numerically and projected on
coherent states. Nothing here calls the closed-form propagators.

Also provided: an exact solver for amplitude damping in the one-excitation
sector, which handles hundreds of modes and is used for continuum-limit
convergence checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .entanglement import MeasureKind, measure_pure
from .errors import AccuracyError, DegenerateOutcomeError, DomainError, ValidationError
from .model import SystemSpec, lindblad_operator

MAX_MODES = 4
MAX_TOTAL_DIM = 20_000
LEAKAGE_THRESHOLD = 1e-6
DEFAULT_RTOL = 1e-10


@dataclass(frozen=True)
class DiscreteBath:
    couplings: tuple
    frequencies: tuple
    fock_cutoff: int = 4

    def __post_init__(self):
        g = tuple(float(x) for x in np.atleast_1d(self.couplings))
        w = tuple(float(x) for x in np.atleast_1d(self.frequencies))
        object.__setattr__(self, "couplings", g)
        object.__setattr__(self, "frequencies", w)
        v = []
        if len(g) != len(w):
            v.append(("frequencies", "one frequency per coupling required"))
        if not 1 <= len(g) <= MAX_MODES:
            v.append(("couplings", f"need 1..{MAX_MODES} modes, got {len(g)}"))
        if int(self.fock_cutoff) < 1:
            v.append(("fock_cutoff", "must be >= 1"))
        if v:
            raise ValidationError(v)

    @property
    def n_modes(self):
        return len(self.couplings)

    @property
    def dim(self):
        return (self.fock_cutoff + 1) ** self.n_modes

    @classmethod
    def flat(cls, n_modes, window, level=1 / (2 * math.pi), fock_cutoff=4):
        """Equally spaced modes on ``[-window, window]`` with ``g^2 = I dw``."""
        dw = 2 * window / n_modes
        w = -window + dw * (np.arange(n_modes) + 0.5)
        return cls(np.full(n_modes, math.sqrt(level * dw)), w, fock_cutoff)

    @classmethod
    def lorentzian(cls, n_modes, omega_d, window, fock_cutoff=4):
        """Discretized ``I(w) = omega_d^2 / (2 pi (w^2 + omega_d^2))``."""
        dw = 2 * window / n_modes
        w = -window + dw * (np.arange(n_modes) + 0.5)
        level = omega_d**2 / (2 * math.pi * (w**2 + omega_d**2))
        return cls(np.sqrt(level * dw), w, fock_cutoff)


@dataclass(frozen=True, eq=False)
class TotalState:
    amplitudes: np.ndarray  # shape (prod(cs_dims), bath dim), row-major modes
    t: float
    cs_dims: tuple
    n_modes: int
    fock_cutoff: int
    leakage: float

    @property
    def tensor(self):
        return self.amplitudes.reshape((-1,) + (self.fock_cutoff + 1,) * self.n_modes)


# -- operators ---------------------------------------------------------------


def _embed(op, dims, target):
    out = sp.identity(1, dtype=complex, format="csr")
    for i, d in enumerate(dims):
        out = sp.kron(out, sp.csr_matrix(op) if i == target else sp.identity(d, dtype=complex), format="csr")
    return out


def _annihilators(n_modes, cutoff):
    a1 = sp.diags(np.sqrt(np.arange(1, cutoff + 1)), 1, dtype=complex)
    return [_embed(a1, (cutoff + 1,) * n_modes, k) for k in range(n_modes)]


def _hamiltonian_terms(cs_dims, target, J, h_cs, bath: DiscreteBath):
    """Static part and per-mode ``(A_l, g_l, w_l)`` so that
    ``-i H(s) = -i H0 + sum_l g_l (A_l e^{i w s} - A_l^dag e^{-i w s})``."""
    n_cs = math.prod(cs_dims)
    h0 = sp.kron(h_cs, sp.identity(bath.dim, dtype=complex), format="csr")
    J_full = _embed(J, cs_dims, target)
    terms = []
    for g, w, a in zip(bath.couplings, bath.frequencies, _annihilators(bath.n_modes, bath.fock_cutoff)):
        A = sp.kron(J_full, a.conj().T, format="csr")
        terms.append((A, A.conj().T.tocsr(), g, w))
    assert h0.shape[0] == n_cs * bath.dim
    return h0, terms


def _integrate(psi0, h0, terms, t, rtol):
    if t == 0:
        return psi0.copy()
    mh0 = (-1j * h0).tocsr()

    def rhs(s, psi):
        out = mh0 @ psi
        for A, Ad, g, w in terms:
            ph = np.exp(1j * w * s)
            out += g * (ph * (A @ psi) - np.conj(ph) * (Ad @ psi))
        return out

    sol = solve_ivp(rhs, (0.0, t), psi0, method="DOP853", rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise AccuracyError(f"integrator failed: {sol.message}")
    return sol.y[:, -1]


def _top_level_population(tensor):
    """Population with any mode at the Fock cutoff."""
    n_modes = tensor.ndim - 1
    top = tensor.shape[1] - 1
    p = np.abs(tensor) ** 2
    mask = np.zeros(tensor.shape[1:], dtype=bool)
    for k in range(n_modes):
        idx = [slice(None)] * n_modes
        idx[k] = top
        mask[tuple(idx)] = True
    return float(p[:, mask].sum())


def _check_leakage(leak):
    if leak > LEAKAGE_THRESHOLD:
        raise AccuracyError(
            f"Fock truncation leakage {leak:.3g} exceeds {LEAKAGE_THRESHOLD:g}; increase fock_cutoff"
        )


def _cs_hamiltonian(spec: SystemSpec):
    h = sp.csr_matrix((spec.dim, spec.dim), dtype=complex)
    for i in range(len(spec.dims)):
        hi = spec.local_hamiltonians[i]
        if hi is not None and np.any(hi):
            h = h + _embed(hi, spec.dims, i)
    return h


def evolve_total(spec: SystemSpec, bath: DiscreteBath, t, tol=DEFAULT_RTOL) -> TotalState:
    """Integrate the joint state from ``|phi(0)> (x) |vac>`` up to time ``t``."""
    t = float(t)
    if t < 0:
        raise DomainError("t must be >= 0")
    if spec.dim * bath.dim > MAX_TOTAL_DIM:
        raise ValidationError([("bath", f"total dimension {spec.dim * bath.dim} exceeds {MAX_TOTAL_DIM}")])
    ch = spec.channel
    J = lindblad_operator(ch, spec.dims[ch.target])
    h0, terms = _hamiltonian_terms(spec.dims, ch.target, J, _cs_hamiltonian(spec), bath)
    psi0 = np.zeros(spec.dim * bath.dim, dtype=complex)
    psi0[:: bath.dim] = spec.initial
    psi = _integrate(psi0, h0, terms, t, tol).reshape(spec.dim, bath.dim)
    shape = (spec.dim,) + (bath.fock_cutoff + 1,) * bath.n_modes
    leak = _top_level_population(psi.reshape(shape))
    _check_leakage(leak)
    return TotalState(psi, t, spec.dims, bath.n_modes, bath.fock_cutoff, leak)


# -- coherent-state projections ----------------------------------------------


def _check_amplitudes(a, n_modes, cutoff):
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    if a.shape != (n_modes,):
        raise ValidationError([("a", f"need {n_modes} mode amplitudes, got shape {a.shape}")])
    if np.any(np.abs(a) ** 2 > cutoff):
        raise AccuracyError("coherent amplitude too large for the Fock cutoff")
    return a


def _fock_weights(a, cutoff):
    """``a^n / sqrt(n!)`` per mode, flattened to the joint Fock basis."""
    n = np.arange(cutoff + 1)
    out = np.ones(1, dtype=complex)
    for ak in a:
        col = np.exp(n * np.log(ak + 0j) - 0.5 * gammaln(n + 1)) if ak != 0 else (n == 0).astype(complex)
        out = np.kron(out, col)
    return out


def project_coherent(total: TotalState, a):
    """Relative state ``e^{|a|^2/2} <a|Psi>`` and the Born ratio ``P(a,t)/P(a,0)``."""
    a = _check_amplitudes(a, total.n_modes, total.fock_cutoff)
    rel = total.amplitudes @ np.conj(_fock_weights(a, total.fock_cutoff))
    return rel, float(np.vdot(rel, rel).real)


def born_density(total: TotalState, a):
    """``P(a,t)`` without the measure normalization: ``e^{-|a|^2} <psi|psi>``."""
    _, ratio = project_coherent(total, a)
    return math.exp(-float(np.sum(np.abs(a) ** 2))) * ratio


def oracle_husimi(total: TotalState, a):
    """``Q(a,t) = <a| Tr_CS |Psi><Psi| |a>`` from the reduced bath density matrix."""
    a = _check_amplitudes(a, total.n_modes, total.fock_cutoff)
    coh = math.exp(-0.5 * float(np.sum(np.abs(a) ** 2))) * _fock_weights(a, total.fock_cutoff)
    v = total.amplitudes
    rho_e = v.T @ v.conj()
    return float(np.real(np.conj(coh) @ rho_e @ coh))


# -- conditional propagator and the scaling law ------------------------------


def extract_propagator(spec: SystemSpec, bath: DiscreteBath, t, a, tol=DEFAULT_RTOL):
    """Conditional propagator on the coupled subsystem, column by column."""
    ch = spec.channel
    d = spec.dims[ch.target]
    J = lindblad_operator(ch, d)
    h_cs = sp.csr_matrix(spec.hamiltonian(ch.target))
    h0, terms = _hamiltonian_terms((d,), 0, J, h_cs, bath)
    a = _check_amplitudes(a, bath.n_modes, bath.fock_cutoff)
    w = np.conj(_fock_weights(a, bath.fock_cutoff))
    cols = []
    for k in range(d):
        psi0 = np.zeros(d * bath.dim, dtype=complex)
        psi0[k * bath.dim] = 1.0
        psi = _integrate(psi0, h0, terms, float(t), tol).reshape(d, bath.dim)
        _check_leakage(_top_level_population(psi.reshape((d,) + (bath.fock_cutoff + 1,) * bath.n_modes)))
        cols.append(psi @ w)
    return np.stack(cols, axis=1)


def log_det(u):
    """``Tr log U``; raises for a singular propagator."""
    u = np.asarray(u, dtype=complex)
    if abs(np.linalg.det(u)) < 1e-300 or np.linalg.cond(u) > 1e14:
        raise DegenerateOutcomeError("conditional propagator is not invertible")
    return complex(np.trace(scipy.linalg.logm(u)))


def oracle_scaling_check(spec: SystemSpec, bath: DiscreteBath, t, a, kind: MeasureKind,
                         tol=DEFAULT_RTOL):
    """Both sides of ``G(normalized psi)/G(phi0) = f P(a,0)/P(a,t)``."""
    kind = MeasureKind(kind)
    g0 = measure_pure(kind, spec.initial)
    if g0 == 0:
        raise DomainError("initial state has zero entanglement")
    total = evolve_total(spec, bath, t, tol)
    rel, ratio = project_coherent(total, a)
    if ratio <= 0:
        raise DegenerateOutcomeError("outcome has zero probability")
    lhs = measure_pure(kind, rel / math.sqrt(ratio)) / g0
    u = extract_propagator(spec, bath, t, a, tol)
    d = u.shape[0]
    f = math.exp(2.0 / d * log_det(u).real)
    return lhs, f / ratio


# -- one-excitation sector ---------------------------------------------------


def single_excitation(gamma, couplings, frequencies, t):
    """Exact amplitude-damping amplitudes for a qubit starting excited.

    Returns ``(c, beta)``: the excited amplitude and the interaction-picture
    one-photon amplitudes, so that the conditional propagator is
    ``[[1, sum(beta * conj(a))], [0, c]]``.
    """
    g = np.asarray(couplings, dtype=float)
    w = np.asarray(frequencies, dtype=float)
    n = g.size
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[0, 1:] = -1j * math.sqrt(gamma) * g
    h[1:, 0] = 1j * math.sqrt(gamma) * g
    h[1:, 1:] = np.diag(w)
    e, v = np.linalg.eigh(h)
    state = v @ (np.exp(-1j * e * t) * v[0].conj())
    return complex(state[0]), state[1:] * np.exp(1j * w * t)
