"""Seeded samplers for the random-matrix ensembles used by the experiments.

All randomness flows through a counter-based Philox generator keyed by
(master_seed, stream_id), so every draw is reproducible bit-for-bit and
distinct streams are independent regardless of evaluation order.

Normalization: GUE entries have E|H_ij|^2 = 1 off the diagonal and unit
variance on it, which puts the spectrum on a semicircle of radius 2 sqrt(N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError

QR_GINIBRE = "qr_ginibre"
EIGVEC_OF_GUE = "eigvec_of_gue"

_U64 = 2**64


@dataclass(frozen=True)
class EnsembleSeed:
    """Reproducible RNG key: a master seed plus a stream id.

    Identical (master_seed, stream_id) pairs reproduce identical draws;
    different stream ids give statistically independent streams.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < _U64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=[int(self.master_seed), int(self.stream_id)])
        )


def _ginibre(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def _gue(rng: np.random.Generator, n: int) -> np.ndarray:
    a = _ginibre(rng, n)
    # (A + A^dagger)/2 is exactly Hermitian in floating point
    return (a + a.conj().T) / 2.0


def sample_gue(n: int, seed: EnsembleSeed) -> np.ndarray:
    """Draw an N x N GUE matrix.

    Diagonal entries ~ Normal(0, 1); off-diagonal real and imaginary parts
    independently ~ Normal(0, 1/2), i.e. E|H_ij|^2 = 1 for i != j.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    return _gue(seed.rng(), n)


def _cue_qr(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(rng, n))
    d = np.diagonal(r)
    # QR is unique only up to column phases; fixing them to the phases of
    # diag(R) makes Q exactly Haar-distributed.
    return q * (d / np.abs(d))


def _cue_eigvec(rng: np.random.Generator, n: int) -> np.ndarray:
    h = _gue(rng, n)
    try:
        _, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    # The eigenvector matrix alone carries the solver's column-phase
    # convention; independent uniform phases restore exact Haar measure.
    return v * np.exp(2j * np.pi * rng.random(n))


def sample_cue(n: int, seed: EnsembleSeed, method: str = QR_GINIBRE) -> np.ndarray:
    """Draw a Haar-distributed N x N unitary.

    Parameters
    ----------
    n : matrix dimension (>= 2).
    seed : EnsembleSeed keying the draw.
    method : "qr_ginibre" (default) takes the phase-corrected QR of a complex
        Ginibre matrix; "eigvec_of_gue" takes the eigenvector matrix of a GUE
        draw with independent random phases applied to the columns.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = seed.rng()
    if method == QR_GINIBRE:
        return _cue_qr(rng, n)
    if method == EIGVEC_OF_GUE:
        return _cue_eigvec(rng, n)
    raise ValueError(f"unknown CUE sampling method {method!r}")


def sample_basis_change(n: int, seed: EnsembleSeed) -> np.ndarray:
    """Haar-random unitary used to re-house a perturbation in a generic basis."""
    return sample_cue(n, seed)
