"""G-invariant entanglement measures and the mixed-state concurrence.

Both pure-state measures are homogeneous of degree two in the (possibly
unnormalized) amplitude vector and invariant under local transformations of
unit determinant. Complex conjugation is taken in the computational basis.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DimensionError, ValidationError
from .model import SIGMA_Y, apply_local


class MeasureKind(enum.Enum):
    CONCURRENCE_2Q = "concurrence"
    SQRT_THREE_TANGLE = "sqrt_three_tangle"

    @property
    def dims(self):
        return (2, 2) if self is MeasureKind.CONCURRENCE_2Q else (2, 2, 2)


def measure_for_dims(dims):
    for kind in MeasureKind:
        if tuple(dims) == kind.dims:
            return kind
    raise DimensionError([("dims", f"no G-invariant measure implemented for layout {tuple(dims)}")])


def hyperdeterminant(a):
    """Cayley hyperdeterminant of a 2x2x2 tensor."""
    a = np.asarray(a).reshape(2, 2, 2)
    return (
        a[0, 0, 0] ** 2 * a[1, 1, 1] ** 2
        + a[0, 0, 1] ** 2 * a[1, 1, 0] ** 2
        + a[0, 1, 0] ** 2 * a[1, 0, 1] ** 2
        + a[1, 0, 0] ** 2 * a[0, 1, 1] ** 2
        - 2 * (
            a[0, 0, 0] * a[1, 1, 1] * a[0, 0, 1] * a[1, 1, 0]
            + a[0, 0, 0] * a[1, 1, 1] * a[0, 1, 0] * a[1, 0, 1]
            + a[0, 0, 0] * a[1, 1, 1] * a[1, 0, 0] * a[0, 1, 1]
            + a[0, 0, 1] * a[1, 1, 0] * a[0, 1, 0] * a[1, 0, 1]
            + a[0, 0, 1] * a[1, 1, 0] * a[1, 0, 0] * a[0, 1, 1]
            + a[0, 1, 0] * a[1, 0, 1] * a[1, 0, 0] * a[0, 1, 1]
        )
        + 4 * (
            a[0, 0, 0] * a[0, 1, 1] * a[1, 0, 1] * a[1, 1, 0]
            + a[1, 1, 1] * a[1, 0, 0] * a[0, 1, 0] * a[0, 0, 1]
        )
    )


def measure_pure(kind: MeasureKind, state) -> float:
    """Evaluate a G-invariant measure on a pure, possibly unnormalized state.

    ``CONCURRENCE_2Q`` is ``|<psi*| sy (x) sy |psi>|`` (1 for a Bell state);
    ``SQRT_THREE_TANGLE`` is ``2 sqrt|Det|`` with ``Det`` the Cayley
    hyperdeterminant (1 for GHZ).
    """
    kind = MeasureKind(kind)
    psi = np.asarray(state, dtype=complex).reshape(-1)
    if psi.size != 2 ** len(kind.dims):
        raise DimensionError([("state", f"{kind.value} needs a {'x'.join(map(str, kind.dims))} layout")])
    if kind is MeasureKind.CONCURRENCE_2Q:
        m = psi.reshape(2, 2)
        return float(2 * abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
    return float(2 * np.sqrt(abs(hyperdeterminant(psi))))


def _check_density(rho, tol=1e-10):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionError([("rho", f"expected 4x4, got {rho.shape}")])
    v = []
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        v.append(("rho", "not Hermitian"))
    if abs(np.trace(rho).real - 1) > tol:
        v.append(("rho", "trace != 1"))
    if not v and np.linalg.eigvalsh(rho).min() < -tol:
        v.append(("rho", "not positive semidefinite"))
    if v:
        raise ValidationError(v)
    return rho


def measure_mixed_concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    The spectrum is taken as the singular values of ``sqrt(rho) Y sqrt(rho)*``
    (``Y = sigma_y (x) sigma_y``), which avoids square roots of the
    round-off-level eigenvalues of the non-Hermitian product.
    """
    rho = _check_density(rho)
    w, v = np.linalg.eigh(rho)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    lam = np.linalg.svd(root @ yy @ root.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def verify_g_invariance(kind: MeasureKind, state, local_ops, tol=1e-10) -> float:
    """``|G(A1 (x) ... (x) An psi) - G(psi)|`` for unit-determinant local matrices."""
    kind = MeasureKind(kind)
    if len(local_ops) != len(kind.dims):
        raise DimensionError([("locals", f"need {len(kind.dims)} local matrices")])
    out = np.asarray(state, dtype=complex)
    for i, op in enumerate(local_ops):
        op = np.asarray(op, dtype=complex)
        if abs(abs(np.linalg.det(op)) - 1) > tol:
            raise ValidationError([(f"locals[{i}]", "determinant modulus must be 1")])
        out = apply_local(out, kind.dims, i, op)
    return abs(measure_pure(kind, out) - measure_pure(kind, state))


def random_sl(d, rng, scale=1.0):
    """Random complex d x d matrix rescaled to unit determinant."""
    m = np.eye(d) + scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return m / np.linalg.det(m) ** (1.0 / d)


def amplitude_damping_kraus(p):
    """Kraus pair of the qubit amplitude-damping map with decay probability ``p``."""
    k0 = np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)
    return k0, k1


def dephasing_kraus(p):
    """Kraus pair of qubit phase damping that scales coherences by ``sqrt(1 - p)``."""
    r = np.sqrt(1 - p)
    k0 = np.sqrt((1 + r) / 2) * np.eye(2, dtype=complex)
    k1 = np.sqrt((1 - r) / 2) * np.diag([1.0, -1.0]).astype(complex)
    return k0, k1


def apply_local_channel(rho, dims, target, kraus):
    """Apply a Kraus map on one subsystem of a composite density matrix."""
    dims = tuple(dims)
    n = len(dims)
    r = np.asarray(rho, dtype=complex).reshape(dims + dims)
    out = np.zeros_like(r)
    for k in kraus:
        t = np.moveaxis(np.tensordot(k, r, axes=([1], [target])), 0, target)
        t = np.moveaxis(np.tensordot(t, k.conj(), axes=([n + target], [1])), -1, n + target)
        out += t
    return out.reshape(rho.shape)
