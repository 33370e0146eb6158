"""Self-check suites shared by the ``verify`` command and the acceptance tests.

Every check returns :class:`CheckResult` rows holding a residual and the
tolerance it is held to.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate
from scipy.stats import unitary_group

from . import kernels, montecarlo as mc
from .entanglement import MeasureKind, measure_pure, random_sl
from .model import (
    Dephasing,
    MarkovAmplitudeDamping,
    OhmicCutoff,
    OUAmplitudeDamping,
    Superohmic,
    SystemSpec,
    apply_local,
    qubit_density,
)
from .oracle import DiscreteBath, born_density, evolve_total, oracle_husimi, oracle_scaling_check
from .propagator import local_propagator

CHANNEL_KINDS = ("markov_amplitude_damping", "dephasing", "ou_amplitude_damping")


@dataclass
class CheckResult:
    suite: str
    check: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""

    def as_row(self):
        return asdict(self)


def _result(suite, check, residual, tol, detail="", upper=True):
    ok = bool(residual < tol) if upper else bool(residual > tol)
    return CheckResult(suite, check, float(residual), float(tol), ok, detail)


def random_state(dims, rng):
    psi = rng.normal(size=math.prod(dims)) + 1j * rng.normal(size=math.prod(dims))
    return psi / np.linalg.norm(psi)


def _random_hermitian(d, rng, scale=0.5):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (m + m.conj().T) / 2


def random_channel(kind, rng, target=0):
    if kind == "markov_amplitude_damping":
        return MarkovAmplitudeDamping(rng.uniform(0.5, 2.0), target)
    if kind == "dephasing":
        return Dephasing(rng.uniform(0.5, 1.0), target=target)
    if kind == "ou_amplitude_damping":
        return OUAmplitudeDamping(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), target)
    raise ValueError(kind)


def random_scaling_instance(kind, rng, n_qubits=2, n_modes=2, fock_cutoff=4):
    """Random (spec, bath, t, a) for one channel-analog discrete bath.

    Couplings and times are bounded so the coherent displacement of each
    mode stays well inside the Fock cutoff.
    """
    measure = MeasureKind.CONCURRENCE_2Q if n_qubits == 2 else MeasureKind.SQRT_THREE_TANGLE
    dims = (2,) * n_qubits
    while True:
        psi = random_state(dims, rng)
        if measure_pure(measure, psi) > 0.1:
            break
    target = int(rng.integers(n_qubits))
    ch = random_channel(kind, rng, target)
    hams = [None if i == target else _random_hermitian(2, rng) for i in range(n_qubits)]
    spec = SystemSpec(dims, psi, (ch,), hams)
    bath = DiscreteBath(rng.uniform(0.1, 0.3, n_modes), rng.uniform(-2, 2, n_modes), fock_cutoff)
    t = rng.uniform(0.2, 1.5)
    a = rng.uniform(0, 1, n_modes) * np.exp(2j * math.pi * rng.uniform(size=n_modes))
    return spec, bath, t, a, measure


# -- suites ------------------------------------------------------------------


def scaling_suite(n_instances=10, seed=0, f_scale=1.0, n_modes=2, n_qubits=(2, 3), tol=1e-6):
    """Oracle check of ``G ratio = f / F`` per channel-analog bath.

    ``f_scale`` multiplies the right-hand side; values other than 1 inject a
    fault the check must detect.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for nq in n_qubits:
        for kind in CHANNEL_KINDS:
            worst = 0.0
            for _ in range(n_instances):
                spec, bath, t, a, measure = random_scaling_instance(kind, rng, nq, n_modes)
                lhs, rhs = oracle_scaling_check(spec, bath, t, a, measure)
                rhs *= f_scale
                worst = max(worst, abs(lhs - rhs) / rhs)
            rows.append(_result("scaling", f"{kind}/{nq}q", worst, tol, f"{n_instances} instances, L={n_modes}"))
    return rows


def matched_states(rho, rng):
    """A 2-qubit and a 3-qubit pure state whose qubit 0 has reduced state ``rho``."""
    lam, vec = np.linalg.eigh(np.asarray(rho, dtype=complex))
    lam = np.clip(lam, 0, None)
    psi2 = sum(math.sqrt(lam[k]) * np.kron(vec[:, k], np.eye(2)[k]) for k in range(2))
    psi3 = sum(math.sqrt(lam[k]) * np.kron(vec[:, k], np.kron(np.eye(2)[k], np.eye(2)[k])) for k in range(2))
    psi2 = apply_local(psi2, (2, 2), 1, unitary_group.rvs(2, random_state=rng))
    for i in (1, 2):
        psi3 = apply_local(psi3, (2, 2, 2), i, unitary_group.rvs(2, random_state=rng))
    return psi2, psi3


def conditional_x(measure, psi, dims, channel, y, t):
    """Normalized entanglement from the propagated state's G ratio."""
    u = local_propagator(channel, y, t)
    out = apply_local(psi, dims, channel.target, u)
    out = out / np.linalg.norm(out)
    return measure_pure(measure, out) / measure_pure(measure, psi)


def universality_suite(n_instances=200, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    rows = []
    for kind in CHANNEL_KINDS:
        worst = 0.0
        for _ in range(n_instances):
            r11 = rng.uniform(0.1, 0.9)
            r10 = rng.uniform(0, 0.9 * math.sqrt(r11 * (1 - r11))) * np.exp(2j * math.pi * rng.uniform())
            rho = qubit_density(r11, r10)
            psi2, psi3 = matched_states(rho, rng)
            ch = random_channel(kind, rng, 0)
            t = rng.uniform(0.1, 1.0)
            y = rng.normal() if kind == "dephasing" else complex(rng.normal(), rng.normal()) * 0.5
            x2 = conditional_x(MeasureKind.CONCURRENCE_2Q, psi2, (2, 2), ch, y, t)
            x3 = conditional_x(MeasureKind.SQRT_THREE_TANGLE, psi3, (2, 2, 2), ch, y, t)
            worst = max(worst, abs(x2 - x3) / x2)
        rows.append(_result("universality", kind, worst, tol, f"{n_instances} matched pairs"))
    return rows


def invariance_suite(n_draws=1000, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    rows = []
    for kind in MeasureKind:
        dims = kind.dims
        hom = sl = 0.0
        for _ in range(n_draws):
            psi = random_state(dims, rng)
            g = measure_pure(kind, psi)
            u = complex(rng.normal(), rng.normal())
            hom = max(hom, abs(measure_pure(kind, u * psi) - abs(u) ** 2 * g))
            out = psi
            for i in range(len(dims)):
                out = apply_local(out, dims, i, random_sl(2, rng, scale=0.5))
            sl = max(sl, abs(measure_pure(kind, out) - g))
        rows.append(_result("invariance", f"{kind.value}/homogeneity", hom, tol, f"{n_draws} draws"))
        rows.append(_result("invariance", f"{kind.value}/sl", sl, tol, f"{n_draws} draws"))
    return rows


def _deriv(fn, s, h=1e-3):
    return (fn(s - 2 * h) - 8 * fn(s - h) + 8 * fn(s + h) - fn(s + 2 * h)) / (12 * h)


def c_equation_residual(gamma, omega_d, grid):
    def alpha(x):
        return 0.5 * omega_d * math.exp(-omega_d * x)

    worst = 0.0
    for s in grid:
        conv = integrate.quad(lambda sp: alpha(s - sp) * kernels.ou_c(gamma, omega_d, sp), 0, s,
                              epsabs=1e-13, epsrel=1e-12)[0]
        lhs = _deriv(lambda x: kernels.ou_c(gamma, omega_d, x), s)
        worst = max(worst, abs(lhs + gamma * conv))
    return worst


def u_equation_residual(gamma, omega_d, grid):
    def alpha(x):
        return 0.5 * omega_d * math.exp(-omega_d * x)

    worst = 0.0
    for s, sp in grid:
        conv = integrate.quad(lambda x: alpha(s - x) * kernels.ou_u(gamma, omega_d, s, x), 0, s,
                              epsabs=1e-13, epsrel=1e-12)[0]
        lhs = _deriv(lambda x: kernels.ou_u(gamma, omega_d, x, sp), s)
        rhs = gamma * kernels.ou_u(gamma, omega_d, s, sp) * conv
        worst = max(worst, abs(lhs - rhs))
    return worst


def ou_zero_by_ode(gamma, omega_d, t_max=200.0):
    """First zero of c(t) from the equivalent local ODE system, independent of closed forms."""

    def rhs(_, v):
        c, m = v  # m = int_0^s alpha(s - s') c(s') ds'
        return [-gamma * m, 0.5 * omega_d * c - omega_d * m]

    def hit(_, v):
        return v[0]

    hit.terminal = True
    hit.direction = -1
    sol = integrate.solve_ivp(rhs, (0, t_max), [1.0, 0.0], events=hit, rtol=1e-12, atol=1e-14,
                              method="DOP853")
    return float(sol.t_events[0][0]) if sol.t_events[0].size else None


def kernel_suite():
    rows = []
    grid = np.linspace(0.1, 3.0, 12)
    for gamma, wd in ((1.0, 4.0), (1.0, 2.0), (2.0, 1.0)):
        rows.append(_result("kernels", f"c-equation mu={2 * gamma / wd:g}",
                            c_equation_residual(gamma, wd, grid), 1e-8))
    pairs = [(s, f * s) for s in np.linspace(0.2, 3.0, 8) for f in (0.0, 0.3, 0.7)]
    rows.append(_result("kernels", "u-equation mu=0.5", u_equation_residual(1.0, 4.0, pairs), 1e-6))
    worst = 0.0
    for dens in (OhmicCutoff(10.0), OhmicCutoff(1.0), Superohmic(1.0), Superohmic(4.0)):
        for t in np.linspace(0.05, 20 / dens.omega_d, 9):
            worst = max(worst, abs(kernels.q_by_quadrature(dens, t) / kernels.q_of_t(dens, t) - 1))
    rows.append(_result("kernels", "q-quadrature", worst, 1e-6))
    worst = 0.0
    for mu in (1.5, 2.0, 5.0, 20.0):
        gamma, wd = 1.0, 2.0 / mu
        worst = max(worst, abs(ou_zero_by_ode(gamma, wd) / kernels.disentanglement_time(gamma, wd) - 1))
    rows.append(_result("kernels", "tau vs ODE zero", worst, 1e-6))
    return rows


def distribution_suite(n_samples=200_000, seed=0, n_bins=400, p=0.5, tol=0.01, n_workers=1):
    rows = []
    rho = qubit_density(0.5)
    for ch in (MarkovAmplitudeDamping(1.0), Dephasing(1.0)):
        t = kernels.time_for_p(ch, p)
        spec = SystemSpec((2, 2), np.array([1, 0, 0, 1]) / math.sqrt(2), (ch,))
        cfg = mc.SamplerConfig(n_samples, seed, n_workers, n_bins)
        hist = mc.entanglement_histogram(spec, t, cfg)
        ref = mc.closed_form_bin_masses(ch, rho, hist.bin_edges, p)
        rows.append(_result("distribution", f"{ch.kind}/ks p={p:g}", mc.ks_distance_binned(hist.weights, ref),
                            tol, f"n={n_samples}"))
    return rows


def mean_suite(n_samples=100_000, seed=0, p_grid=(0.25, 0.5, 0.75), n_workers=1):
    rows = []
    rho = qubit_density(0.5)
    for ch in (MarkovAmplitudeDamping(1.0), Dephasing(1.0)):
        for p in p_grid:
            t = kernels.time_for_p(ch, p)
            x, w = mc.entanglement_samples(ch, rho, t, mc.SamplerConfig(n_samples, seed, n_workers))
            mean, se, _ = mc.weighted_mean(x, w)
            z = abs(mean - math.sqrt(1 - p)) / se
            rows.append(_result("mean", f"{ch.kind}/p={p:g}", z, 3.0, "residual in standard errors"))
    return rows


def husimi_suite(n_points=100, seed=0, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_points):
        kind = CHANNEL_KINDS[i % 3]
        spec, bath, t, a, _ = random_scaling_instance(kind, rng)
        total = evolve_total(spec, bath, t)
        worst = max(worst, abs(oracle_husimi(total, a) / born_density(total, a) - 1))
    return [_result("husimi", "Q = P", worst, tol, f"{n_points} points")]


SUITES = {
    "scaling": scaling_suite,
    "universality": universality_suite,
    "invariance": invariance_suite,
    "kernels": kernel_suite,
    "distribution": distribution_suite,
    "mean": mean_suite,
    "husimi": husimi_suite,
}
DEFAULT_SUITES = tuple(SUITES)
