"""Dense complex linear algebra with explicit residual contracts.

Matrices and state vectors are plain complex numpy arrays; this module adds
the validated spectral decompositions everything downstream is built on.
Phase convention for unitaries: U |v> = exp(-i phi) |v|>, phi in [0, 2pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimMismatchError,
    NoConvergenceError,
    NotHermitianError,
    NotUnitaryError,
)

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


def max_abs(a: np.ndarray) -> float:
    """Entrywise max-norm; 0 for empty arrays."""
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def _as_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix contains non-finite entries")
    return m


@dataclass(frozen=True)
class HermitianEigen:
    """Spectral decomposition H = V diag(w) V^dagger, eigenvalues ascending."""

    eigenvalues: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class UnitaryEigen:
    """Eigenphases phi in [0, 2pi) sorted ascending, with U v_m = exp(-i phi_m) v_m."""

    eigenphases: np.ndarray
    vectors: np.ndarray


def hermitian_eig(h: np.ndarray) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix (ascending eigenvalues).

    Raises NotHermitianError when the max-norm of H - H^dagger exceeds 1e-12,
    NoConvergenceError if the underlying solver gives up.
    """
    h = _as_square(h)
    if max_abs(h - h.conj().T) > HERMITIAN_TOL:
        raise NotHermitianError("matrix is not Hermitian within 1e-12")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    return HermitianEigen(w, v)


def unitary_eig(u: np.ndarray) -> UnitaryEigen:
    """Eigendecomposition of a unitary matrix via its complex Schur form.

    For a normal matrix the Schur vectors are orthonormal eigenvectors, so
    this is numerically robust even with clustered eigenphases.  Phases obey
    U v = exp(-i phi) v and come back sorted ascending in [0, 2pi).
    """
    u = _as_square(u)
    n = u.shape[0]
    if max_abs(u.conj().T @ u - np.eye(n)) > UNITARY_TOL:
        raise NotUnitaryError("matrix is not unitary within 1e-10")
    try:
        t, z = scipy.linalg.schur(u, output="complex")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NoConvergenceError(str(exc)) from exc
    phases = (-np.angle(np.diagonal(t))) % (2.0 * np.pi)
    order = np.argsort(phases, kind="stable")
    return UnitaryEigen(phases[order], z[:, order])


def exp_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Propagator exp(-i H t) for Hermitian H, via spectral decomposition."""
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    eig = hermitian_eig(h)
    phases = np.exp(-1j * eig.eigenvalues * float(t))
    return (eig.vectors * phases) @ eig.vectors.conj().T


def apply(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product M v."""
    m = np.asarray(m, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise DimMismatchError(f"cannot apply {m.shape} to {v.shape}")
    return m @ v


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Hermitian inner product <u|v> = sum conj(u_i) v_i."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.ndim != 1:
        raise DimMismatchError(f"incompatible vectors {u.shape} and {v.shape}")
    return complex(np.vdot(u, v))
