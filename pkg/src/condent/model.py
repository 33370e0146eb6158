"""Multipartite central system, its open channels, and JSON ingestion.

Basis conventions
-----------------
Composite states are flat complex vectors in row-major tensor order over the
subsystem indices (the last subsystem varies fastest). For a qubit, index 0 is
the ground state and index 1 the excited state, so that

    sigma_minus = |0><1|,   n = sigma_plus sigma_minus = |1><1|,
    sigma_z = n - sigma_minus sigma_plus = diag(-1, 1).

A 2x2 density matrix ``rho`` is indexed ``rho[i, j] = <i|rho|j>``; the excited
population is ``rho[1, 1]`` and the coherence ``rho10 = rho[1, 0]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import ClassVar, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DimensionError, ValidationError

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
N_EXCITED = SIGMA_PLUS @ SIGMA_MINUS
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]])

DEFAULT_MAX_DIM = 64
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12


# -- spectral densities ------------------------------------------------------


@dataclass(frozen=True)
class PurelyOhmic:
    """Flat spectrum, memoryless bath."""

    name: ClassVar[str] = "purely_ohmic"


@dataclass(frozen=True)
class OhmicCutoff:
    """Ohmic spectrum with exponential cut-off at the Debye frequency."""

    omega_d: float
    name: ClassVar[str] = "ohmic_cutoff"


@dataclass(frozen=True)
class Superohmic:
    omega_d: float
    name: ClassVar[str] = "superohmic"


@dataclass(frozen=True)
class Lorentzian:
    """Spectrum whose correlation kernel is (omega_d/2) exp(-omega_d |s|)."""

    omega_d: float
    name: ClassVar[str] = "lorentzian"


SpectralDensity = Union[PurelyOhmic, OhmicCutoff, Superohmic, Lorentzian]
_DENSITIES = {c.name: c for c in (PurelyOhmic, OhmicCutoff, Superohmic, Lorentzian)}


# -- channels ----------------------------------------------------------------


@dataclass(frozen=True)
class MarkovAmplitudeDamping:
    """Zero-temperature Markovian decay, J = sqrt(gamma) sigma_minus."""

    gamma: float
    target: int = 0
    kind: ClassVar[str] = "markov_amplitude_damping"


@dataclass(frozen=True)
class Dephasing:
    """Non-demolition channel, J = (delta/2) diag(levels), made traceless.

    ``levels`` defaults to ``(-1, 1)``, i.e. J = (delta/2) sigma_z on a qubit.
    Supplying more levels couples a qudit through a diagonal operator.
    """

    delta: float
    density: SpectralDensity = PurelyOhmic()
    target: int = 0
    levels: Optional[tuple] = None
    kind: ClassVar[str] = "dephasing"


@dataclass(frozen=True)
class OUAmplitudeDamping:
    """Amplitude damping into a bath with exponential (Ornstein-Uhlenbeck) memory."""

    gamma: float
    omega_d: float
    target: int = 0
    kind: ClassVar[str] = "ou_amplitude_damping"

    @property
    def mu(self):
        return 2.0 * self.gamma / self.omega_d


Channel = Union[MarkovAmplitudeDamping, Dephasing, OUAmplitudeDamping]
_CHANNELS = {c.kind: c for c in (MarkovAmplitudeDamping, Dephasing, OUAmplitudeDamping)}
AMPLITUDE_DAMPING = (MarkovAmplitudeDamping, OUAmplitudeDamping)


def check_channel(channel: Channel, path: str = "channel") -> list:
    """Return parameter violations of a single channel as ``(path, msg)`` pairs."""
    out = []

    def positive(name, value):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            out.append((f"{path}.{name}", f"must be a positive number, got {value!r}"))

    if isinstance(channel, MarkovAmplitudeDamping):
        positive("gamma", channel.gamma)
    elif isinstance(channel, OUAmplitudeDamping):
        positive("gamma", channel.gamma)
        positive("omega_d", channel.omega_d)
    elif isinstance(channel, Dephasing):
        positive("delta", channel.delta)
        dens = channel.density
        if not isinstance(dens, tuple(_DENSITIES.values())):
            out.append((f"{path}.density", f"unknown spectral density {dens!r}"))
        elif hasattr(dens, "omega_d"):
            positive("density.omega_d", dens.omega_d)
        if channel.levels is not None:
            lv = np.asarray(channel.levels, dtype=float)
            if lv.ndim != 1 or lv.size < 2 or np.ptp(lv) == 0:
                out.append((f"{path}.levels", "need at least two distinct real levels"))
    else:
        out.append((path, f"unknown channel type {type(channel).__name__}"))
    if not isinstance(getattr(channel, "target", None), (int, np.integer)):
        out.append((f"{path}.target", "must be an integer subsystem index"))
    return out


def renormalize_lindblad(L):
    """Split ``L`` into a traceless part and a multiple of the identity.

    Returns ``(J, alpha)`` with ``J = L - alpha*I`` and ``alpha = Tr(L)/d``.
    The shift ``alpha`` is what enters the accompanying Hamiltonian
    renormalisation; it is returned for bookkeeping only.
    """
    L = np.asarray(L, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError([("L", f"expected a square matrix, got shape {L.shape}")])
    d = L.shape[0]
    if d < 2:
        raise DimensionError([("L", "dimension must be at least 2")])
    alpha = np.trace(L) / d
    return L - alpha * np.eye(d), complex(alpha)


def lindblad_operator(channel: Channel, d: int = 2) -> np.ndarray:
    """Traceless coupling operator of ``channel`` on a ``d``-level target."""
    if isinstance(channel, AMPLITUDE_DAMPING):
        if d != 2:
            raise DimensionError([("target", "channel requires qubit")])
        return math.sqrt(channel.gamma) * SIGMA_MINUS
    levels = (-1.0, 1.0) if channel.levels is None else channel.levels
    if len(levels) != d:
        raise DimensionError([("levels", f"need {d} levels for a {d}-level target")])
    J, _ = renormalize_lindblad(np.diag(np.asarray(levels, dtype=float)) * channel.delta / 2)
    return J


# -- states ------------------------------------------------------------------


def apply_local(state, dims, target, op):
    """Apply the single-subsystem operator ``op`` to ``target`` of a composite state."""
    dims = tuple(dims)
    psi = np.asarray(state, dtype=complex).reshape(dims)
    psi = np.tensordot(op, psi, axes=([1], [target]))
    return np.moveaxis(psi, 0, target).reshape(-1)


def reduced_density_matrix(state, dims, target, check_norm=True):
    """Reduced density matrix of subsystem ``target`` of a pure state."""
    dims = tuple(int(d) for d in dims)
    psi = np.asarray(state, dtype=complex)
    if psi.size != math.prod(dims):
        raise DimensionError([("state", f"size {psi.size} does not match dims {dims}")])
    if not 0 <= target < len(dims):
        raise ValidationError([("target", f"index {target} out of range")])
    if check_norm and abs(np.vdot(psi, psi).real - 1) > 1e-10:
        raise ValidationError([("state", "state is not normalized")])
    m = np.moveaxis(psi.reshape(dims), target, 0).reshape(dims[target], -1)
    return m @ m.conj().T


def channel_elements(rho):
    """``(rho11, rho10)`` of a qubit density matrix: excited population and coherence."""
    rho = np.asarray(rho)
    return float(rho[1, 1].real), complex(rho[1, 0])


def qubit_density(rho11, rho10=0.0):
    """Build a 2x2 density matrix from its excited population and coherence."""
    return np.array([[1 - rho11, np.conj(rho10)], [rho10, rho11]], dtype=complex)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    dims: tuple
    initial: np.ndarray
    channels: tuple = ()
    local_hamiltonians: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=complex).reshape(-1))
        object.__setattr__(self, "channels", tuple(self.channels))
        hams = tuple(self.local_hamiltonians) or (None,) * len(self.dims)
        object.__setattr__(
            self,
            "local_hamiltonians",
            tuple(None if h is None else np.asarray(h, dtype=complex) for h in hams),
        )

    @property
    def dim(self):
        return math.prod(self.dims)

    @property
    def channel(self) -> Channel:
        """The single open channel; most closed forms assume exactly one."""
        if len(self.channels) != 1:
            raise ValidationError([("channels", f"expected one channel, got {len(self.channels)}")])
        return self.channels[0]

    def hamiltonian(self, i):
        h = self.local_hamiltonians[i]
        return np.zeros((self.dims[i],) * 2, dtype=complex) if h is None else h

    def rho_channel(self):
        """Initial reduced density matrix of the subsystem carrying the channel."""
        return reduced_density_matrix(self.initial, self.dims, self.channel.target)


def validate_system(spec: SystemSpec, max_dim: int = DEFAULT_MAX_DIM) -> SystemSpec:
    """Check every invariant of ``spec``; raise ``ValidationError`` listing all violations."""
    v = []
    dims = spec.dims
    if len(dims) < 1:
        v.append(("dims", "need at least one subsystem"))
    for i, d in enumerate(dims):
        if d < 2:
            v.append((f"dims[{i}]", f"dimension must be >= 2, got {d}"))
    total = math.prod(dims) if dims else 0
    if total > max_dim:
        v.append(("dims", f"total dimension {total} exceeds cap {max_dim}"))
    if spec.initial.size != total:
        v.append(("initial_state", f"length {spec.initial.size} != total dimension {total}"))
    elif abs(np.vdot(spec.initial, spec.initial).real - 1) > NORM_TOL:
        v.append(("initial_state", "state is not normalized"))

    if len(spec.local_hamiltonians) != len(dims):
        v.append(("local_hamiltonians", "need one entry (or null) per subsystem"))
    else:
        for i, h in enumerate(spec.local_hamiltonians):
            if h is None:
                continue
            if h.shape != (dims[i], dims[i]):
                v.append((f"local_hamiltonians[{i}]", f"shape {h.shape} != ({dims[i]}, {dims[i]})"))
            elif np.max(np.abs(h - h.conj().T), initial=0) > HERMITIAN_TOL:
                v.append((f"local_hamiltonians[{i}]", "not Hermitian"))

    seen = set()
    for k, ch in enumerate(spec.channels):
        path = f"channels[{k}]"
        errs = check_channel(ch, path)
        v.extend(errs)
        if errs:
            continue
        t = ch.target
        if not 0 <= t < len(dims):
            v.append((f"{path}.target", f"index {t} out of range"))
            continue
        if t in seen:
            v.append((f"{path}.target", "at most one channel per subsystem"))
        seen.add(t)
        if isinstance(ch, AMPLITUDE_DAMPING) and dims[t] != 2:
            v.append((f"{path}.target", "channel requires qubit"))
            continue
        if isinstance(ch, Dephasing):
            nlev = 2 if ch.levels is None else len(ch.levels)
            if nlev != dims[t]:
                v.append((f"{path}.levels", f"need {dims[t]} levels for target dimension"))
                continue
        if len(spec.local_hamiltonians) != len(dims):
            continue
        h = spec.local_hamiltonians[t]
        if h is None or h.shape != (dims[t], dims[t]):
            continue
        if isinstance(ch, AMPLITUDE_DAMPING):
            if np.max(np.abs(h)) > HERMITIAN_TOL:
                v.append((f"local_hamiltonians[{t}]", "frozen dynamics required on amplitude-damping target"))
        elif not _proportional(h, lindblad_operator(ch, dims[t])):
            v.append((f"local_hamiltonians[{t}]", "must be proportional to the dephasing operator"))
    if v:
        raise ValidationError(v)
    return spec


def _proportional(h, j, tol=1e-10):
    nj = np.vdot(j, j).real
    c = np.vdot(j, h) / nj
    return np.max(np.abs(h - c * j)) <= tol and abs(c.imag) <= tol


# -- JSON ingestion ----------------------------------------------------------


def _complex_list(obj, path):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError([(path, "expected [re, im] pairs")]) from None
    if arr.shape[-1:] != (2,):
        raise ConfigError([(path, "expected [re, im] pairs")])
    return arr[..., 0] + 1j * arr[..., 1]


def density_from_dict(d, path="density"):
    if isinstance(d, str):
        d = {"shape": d}
    shape = d.get("shape")
    cls = _DENSITIES.get(shape)
    if cls is None:
        raise ConfigError([(f"{path}.shape", f"unknown spectral density {shape!r}; one of {sorted(_DENSITIES)}")])
    if cls is PurelyOhmic:
        return cls()
    if "omega_d" not in d:
        raise ConfigError([(f"{path}.omega_d", "missing")])
    return cls(float(d["omega_d"]))


def density_to_dict(dens):
    out = {"shape": dens.name}
    if hasattr(dens, "omega_d"):
        out["omega_d"] = dens.omega_d
    return out


def channel_from_dict(d, path="channel"):
    kind = d.get("kind")
    cls = _CHANNELS.get(kind)
    if cls is None:
        raise ConfigError([(f"{path}.kind", f"unknown channel kind {kind!r}; one of {sorted(_CHANNELS)}")])
    params = dict(d.get("params", {}))
    target = d.get("target", 0)
    try:
        if cls is Dephasing:
            dens = density_from_dict(params.pop("density", {"shape": "purely_ohmic"}), f"{path}.params.density")
            levels = params.pop("levels", None)
            ch = Dephasing(float(params.pop("delta")), dens, target,
                           None if levels is None else tuple(float(x) for x in levels))
        elif cls is MarkovAmplitudeDamping:
            ch = cls(float(params.pop("gamma")), target)
        else:
            ch = cls(float(params.pop("gamma")), float(params.pop("omega_d")), target)
    except KeyError as exc:
        raise ConfigError([(f"{path}.params.{exc.args[0]}", "missing")]) from None
    if params:
        raise ConfigError([(f"{path}.params", f"unexpected keys {sorted(params)}")])
    errs = check_channel(ch, path)
    if errs:
        raise ConfigError(errs)
    return ch


def channel_to_dict(ch):
    if isinstance(ch, MarkovAmplitudeDamping):
        params = {"gamma": ch.gamma}
    elif isinstance(ch, OUAmplitudeDamping):
        params = {"gamma": ch.gamma, "omega_d": ch.omega_d}
    else:
        params = {"delta": ch.delta, "density": density_to_dict(ch.density)}
        if ch.levels is not None:
            params["levels"] = list(ch.levels)
    return {"kind": ch.kind, "target": ch.target, "params": params}


def system_from_dict(d, max_dim=DEFAULT_MAX_DIM):
    for key in ("dims", "initial_state"):
        if key not in d:
            raise ConfigError([(key, "missing")])
    dims = d["dims"]
    psi = _complex_list(d["initial_state"], "initial_state")
    if d.get("normalize", False):
        psi = psi / np.linalg.norm(psi)
    channels, parse_errors = [], []
    for i, c in enumerate(d.get("channels", [])):
        try:
            channels.append(channel_from_dict(c, f"channels[{i}]"))
        except ConfigError as exc:
            parse_errors.extend(exc.violations)
    hams_in = d.get("local_hamiltonians") or [None] * len(dims)
    if isinstance(hams_in, dict):
        hams = [None] * len(dims)
        for k, h in hams_in.items():
            hams[int(k)] = h
        hams_in = hams
    hams = [None if h is None else _complex_list(h, f"local_hamiltonians[{i}]")
            for i, h in enumerate(hams_in)]
    spec = SystemSpec(dims, psi, channels, hams)
    try:
        validate_system(spec, max_dim=max_dim)
    except ValidationError as exc:
        parse_errors.extend(exc.violations)
    if parse_errors:
        raise ConfigError(parse_errors)
    return spec


def system_to_dict(spec: SystemSpec):
    def pairs(a):
        a = np.asarray(a)
        return np.stack([a.real, a.imag], axis=-1).tolist()

    return {
        "dims": list(spec.dims),
        "initial_state": pairs(spec.initial),
        "channels": [channel_to_dict(c) for c in spec.channels],
        "local_hamiltonians": [None if h is None else pairs(h) for h in spec.local_hamiltonians],
    }


def load_system(path, max_dim=DEFAULT_MAX_DIM):
    """Read a ``SystemSpec`` from a JSON file.

    Syntax errors are reported with line and column, schema errors with the
    offending key path.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)]) from None
    return system_from_dict(d, max_dim=max_dim)


def product_state(*kets: Sequence[complex]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for k in kets:
        out = np.kron(out, np.asarray(k, dtype=complex))
    return out
