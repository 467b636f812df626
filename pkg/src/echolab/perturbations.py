"""Construction of the perturbation step U_p = exp(-i delta V).

V is the collective qubit z-rotation generator: its eigenvalue attached to
computational index i is (n_q - 2 popcount(i)) / 2, a binomial spectrum with
mean 0 and variance n_q / 4.  The same spectrum can be re-housed in a
system-coordinate eigenbasis or a Haar-random one; a similarity transform
leaves the spectrum (and hence the golden-rule rate) unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .ensembles import EnsembleSeed, sample_basis_change
from .errors import DimMismatchError, NotUnitaryError
from .linalg import UNITARY_TOL, max_abs

MAX_QUBITS = 24


@dataclass(frozen=True)
class Computational:
    """Perturbation diagonal in the computational basis."""


@dataclass(frozen=True)
class CoordinateBasis:
    """Perturbation diagonal in the basis given by the columns of `transform`."""

    transform: np.ndarray


@dataclass(frozen=True)
class RandomCue:
    """Perturbation diagonal in a seeded Haar-random basis."""

    seed: EnsembleSeed


Basis = Union[Computational, CoordinateBasis, RandomCue]


@dataclass(frozen=True)
class PerturbationSpec:
    n_q: int
    delta: float
    basis: Basis = Computational()

    def __post_init__(self):
        if not (1 <= self.n_q <= MAX_QUBITS):
            raise ValueError(f"n_q must be in [1, {MAX_QUBITS}], got {self.n_q}")
        if not (np.isfinite(self.delta) and self.delta >= 0.0):
            raise ValueError(f"delta must be finite and >= 0, got {self.delta}")


@dataclass(frozen=True)
class FgrPrediction:
    """Golden-rule decay prediction Gamma = 2 pi sigma^2 / Delta = delta^2 lambda_var."""

    gamma: float
    sigma2: float
    delta_level: float
    lambda_var: float


def collective_z_spectrum(n_q: int) -> np.ndarray:
    """Eigenvalue of the collective rotation generator per computational index.

    Entry i equals (n_q - 2 popcount(i)) / 2; the multiset is (2k - n_q)/2
    with multiplicity C(n_q, k) and sums to zero exactly.
    """
    if not (1 <= n_q <= MAX_QUBITS):
        raise ValueError(f"n_q must be in [1, {MAX_QUBITS}], got {n_q}")
    idx = np.arange(2**n_q, dtype=np.uint64)
    ones = np.bitwise_count(idx).astype(np.int64)
    return (n_q - 2 * ones) / 2.0


def spectrum_variance(n_q: int) -> float:
    """Variance of the collective spectrum, (1/N) sum_k ((2k - n_q)/2)^2 C(n_q, k).

    Evaluated in exact integer arithmetic; equals n_q / 4.
    """
    if not (1 <= n_q <= MAX_QUBITS):
        raise ValueError(f"n_q must be in [1, {MAX_QUBITS}], got {n_q}")
    numerator = sum(math.comb(n_q, k) * (2 * k - n_q) ** 2 for k in range(n_q + 1))
    return numerator / (4 * 2**n_q)


def fgr_rate(spec: PerturbationSpec) -> FgrPrediction:
    """Golden-rule rate prediction for a collective-rotation perturbation."""
    n = 2**spec.n_q
    lam2 = spectrum_variance(spec.n_q)
    gamma = spec.delta**2 * lam2
    return FgrPrediction(
        gamma=gamma,
        sigma2=spec.delta**2 * lam2 / n,
        delta_level=2.0 * np.pi / n,
        lambda_var=lam2,
    )


def build_perturbation(spec: PerturbationSpec) -> np.ndarray:
    """Dense N x N unitary U_p = exp(-i delta V) in the requested eigenbasis."""
    n = 2**spec.n_q
    diag = np.exp(-1j * spec.delta * collective_z_spectrum(spec.n_q))
    basis = spec.basis
    if isinstance(basis, Computational):
        return np.diag(diag)
    if isinstance(basis, CoordinateBasis):
        b = np.asarray(basis.transform, dtype=complex)
        if b.shape != (n, n):
            raise DimMismatchError(f"transform shape {b.shape} does not match N = {n}")
        if max_abs(b.conj().T @ b - np.eye(n)) > UNITARY_TOL:
            raise NotUnitaryError("coordinate transform is not unitary within 1e-10")
        return (b * diag) @ b.conj().T
    if isinstance(basis, RandomCue):
        t = sample_basis_change(n, basis.seed)
        return (t * diag) @ t.conj().T
    raise TypeError(f"unknown basis variant {basis!r}")
