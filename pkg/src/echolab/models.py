"""Builders for the unperturbed maps: quantum kicked top and GUE propagator.

Basis convention: the working basis is the J_z eigenbasis ordered by
descending magnetic quantum number m = j, j-1, ..., -j.  The J_y eigenbasis
used for coordinate-tied perturbations follows the same descending-eigenvalue
ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSeed, sample_gue
from .errors import InvalidSpinError
from .linalg import exp_hermitian, hermitian_eig


@dataclass(frozen=True)
class KickedTopParams:
    """Spin j (integer or half-integer) and kick strength k; N = 2j + 1."""

    j: float
    k: float


@dataclass(frozen=True)
class GuePropagatorParams:
    """Time delay tau between perturbations and the seed of the GUE draw."""

    tau: float
    seed: EnsembleSeed


def _check_spin(j: float) -> int:
    two_j = round(2.0 * j)
    if two_j <= 0 or abs(2.0 * j - two_j) > 1e-9:
        raise InvalidSpinError(f"j must be a positive integer or half-integer, got {j}")
    return two_j


def m_values(j: float) -> np.ndarray:
    """Magnetic quantum numbers j, j-1, ..., -j (the basis ordering)."""
    two_j = _check_spin(j)
    return j - np.arange(two_j + 1)


def angular_momentum(j: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (Jy, Jz) in the descending-m J_z eigenbasis.

    Jz = diag(m); Jy = (J+ - J-)/(2i) with the standard ladder elements
    <m+1|J+|m> = sqrt(j(j+1) - m(m+1)).  Both are exactly Hermitian.
    """
    m = m_values(j)
    n = m.size
    jz = np.diag(m.astype(complex))
    # raising from m (index i >= 1) lands on index i-1 in descending order
    c = np.sqrt(j * (j + 1.0) - m[1:] * (m[1:] + 1.0))
    jp = np.zeros((n, n), dtype=complex)
    jp[np.arange(n - 1), np.arange(1, n)] = c
    jy = (jp - jp.conj().T) / 2j
    return jy, jz


def coordinate_eigenbasis(j: float, axis: str) -> np.ndarray:
    """Matrix whose k-th column is the k-th coordinate eigenvector.

    Columns are ordered by descending eigenvalue, mirroring the J_z basis
    ordering.  axis="z" is the working basis itself (identity); axis="y"
    diagonalizes Jy.
    """
    two_j = _check_spin(j)
    n = two_j + 1
    if axis == "z":
        return np.eye(n, dtype=complex)
    if axis == "y":
        jy, _ = angular_momentum(j)
        eig = hermitian_eig(jy)
        order = np.argsort(eig.eigenvalues, kind="stable")[::-1]
        return np.ascontiguousarray(eig.vectors[:, order])
    raise ValueError(f"unknown coordinate axis {axis!r}")


def build_kicked_top(p: KickedTopParams) -> np.ndarray:
    """One period of the kicked top: exp(-i pi Jy / 2) exp(-i k Jz^2 / j).

    The torsion factor is an exact diagonal exp(-i k m^2 / j); the rotation
    is built through the Hermitian propagator of Jy.
    """
    m = m_values(p.j)
    torsion = np.exp(-1j * p.k * m * m / p.j)
    jy, _ = angular_momentum(p.j)
    rotation = exp_hermitian(jy, np.pi / 2.0)
    return rotation * torsion  # scales columns: rotation @ diag(torsion)


def build_gue_propagator(p: GuePropagatorParams, n: int) -> np.ndarray:
    """Autonomous-system propagator exp(-i H tau) for a seeded GUE draw."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not (np.isfinite(p.tau) and p.tau >= 0.0):
        raise ValueError(f"tau must be finite and >= 0, got {p.tau}")
    return exp_hermitian(sample_gue(n, p.seed), p.tau)
