"""Spectral statistics: unfolded spacings, LDOS profiles, Lorentzian fits.

Spacings are unfolded on the unit circle (uniform mean density), so the N
gaps between sorted eigenphases, times N / 2pi, have mean one by
construction.  The LDOS of an unperturbed eigenstate over the perturbed
eigenbasis Fourier-transforms back to the fidelity curve exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.special import erf

from .errors import FitDivergedError, TooFewLevelsError
from .fidelity import FidelityCurve
from .linalg import unitary_eig

POISSON = "poisson"
WIGNER_GUE = "wigner_gue"

HIST_BINS = 32
HIST_RANGE = (0.0, 4.0)


@dataclass(frozen=True)
class SpacingHistogram:
    """Sorted unit-mean spacings plus a fixed-grid histogram for plotting."""

    spacings: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    n_levels: int


@dataclass(frozen=True)
class LdosProfile:
    """Weights of one unperturbed eigenstate over the perturbed eigenbasis."""

    center_phase: float
    weights: np.ndarray
    phases: np.ndarray


@dataclass(frozen=True)
class LorentzianFit:
    width: float
    center: float
    rss: float


def nn_spacings(u: np.ndarray) -> SpacingHistogram:
    """Unfolded nearest-neighbor spacings of a unitary's eigenphases.

    Includes the wrap-around gap, so there are exactly N spacings and their
    mean is 1 by construction.
    """
    phases = unitary_eig(u).eigenphases
    n = phases.size
    gaps = np.diff(phases, append=phases[0] + 2.0 * np.pi)
    s = np.sort(gaps * n / (2.0 * np.pi))
    counts, edges = np.histogram(s, bins=HIST_BINS, range=HIST_RANGE)
    return SpacingHistogram(spacings=s, bin_edges=edges, counts=counts, n_levels=n)


def reference_pdf(model: str, s):
    """Unit-mean spacing density: Poisson exp(-s) or the Wigner surmise
    (32/pi^2) s^2 exp(-4 s^2 / pi) for the unitary symmetry class."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be >= 0")
    if model == POISSON:
        return np.exp(-s)
    if model == WIGNER_GUE:
        return (32.0 / np.pi**2) * s**2 * np.exp(-4.0 * s**2 / np.pi)
    raise ValueError(f"unknown spacing model {model!r}")


def reference_cdf(model: str, s):
    """Closed-form CDF of reference_pdf."""
    s = np.asarray(s, dtype=float)
    if model == POISSON:
        return 1.0 - np.exp(-s)
    if model == WIGNER_GUE:
        return erf(2.0 * s / np.sqrt(np.pi)) - (4.0 * s / np.pi) * np.exp(
            -4.0 * s**2 / np.pi
        )
    raise ValueError(f"unknown spacing model {model!r}")


def ks_distance(h: SpacingHistogram, model: str) -> float:
    """Sup-norm distance between the empirical spacing CDF and a reference."""
    if h.n_levels < 50:
        raise TooFewLevelsError(f"need >= 50 levels, got {h.n_levels}")
    s = h.spacings
    n = s.size
    cdf = reference_cdf(model, s)
    steps = np.arange(n, dtype=float)
    return float(np.max(np.maximum(cdf - steps / n, (steps + 1.0) / n - cdf)))


def ldos(u: np.ndarray, up: np.ndarray, eigenstate_index: int) -> LdosProfile:
    """LDOS weights |<v_o|v'_m>|^2 of one eigenstate of U over those of U_p U."""
    unperturbed = unitary_eig(u)
    n = unperturbed.eigenphases.size
    if not (0 <= eigenstate_index < n):
        raise ValueError(f"eigenstate_index {eigenstate_index} out of range for N = {n}")
    v_o = unperturbed.vectors[:, eigenstate_index]
    perturbed = unitary_eig(np.asarray(up, dtype=complex) @ np.asarray(u, dtype=complex))
    weights = np.abs(v_o.conj() @ perturbed.vectors) ** 2
    return LdosProfile(
        center_phase=float(unperturbed.eigenphases[eigenstate_index]),
        weights=weights,
        phases=perturbed.eigenphases,
    )


def _wrap(x: np.ndarray) -> np.ndarray:
    return (x + np.pi) % (2.0 * np.pi) - np.pi


def _weighted_hwhm_guess(d: np.ndarray, w: np.ndarray, center: float) -> float:
    # median absolute deviation equals the HWHM for a Lorentzian
    order = np.argsort(np.abs(d - center))
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(np.abs(d[order[min(k, d.size - 1)]] - center))


def lorentzian_fit(p: LdosProfile) -> LorentzianFit:
    """Fit a Lorentzian A (G/2) / ((phi - c)^2 + (G/2)^2) to the binned LDOS.

    Weights are aggregated into phase bins four mean level spacings wide and
    the fit matches per-bin mass against the analytic integral of the model
    over each bin, so the recovered width is unbiased by the bin size.
    """
    n = p.weights.size
    if n < 32:
        raise ValueError(f"need >= 32 weights, got {n}")
    d = _wrap(p.center_phase - p.phases)
    nbins = max(n // 4, 8)
    masses, edges = np.histogram(d, bins=nbins, range=(-np.pi, np.pi), weights=p.weights)

    def model_mass(params):
        a, c, g = params
        t = np.arctan((edges - c) / (g / 2.0))
        return a * np.diff(t)

    c0 = float(np.sum(d * p.weights))
    g0 = max(2.0 * _weighted_hwhm_guess(d, p.weights, c0), edges[1] - edges[0])
    x0 = np.array([1.0 / np.pi, c0, g0])
    result = scipy.optimize.least_squares(
        lambda params: model_mass(params) - masses,
        x0,
        bounds=([0.0, -np.pi, 1e-12], [np.inf, np.pi, 2.0 * np.pi]),
        max_nfev=2000,
    )
    if not result.success or not np.isfinite(result.x).all() or result.x[2] <= 0.0:
        raise FitDivergedError(f"Lorentzian fit failed: {result.message}")
    a, c, g = result.x
    return LorentzianFit(width=float(g), center=float(c), rss=float(2.0 * result.cost))


def fidelity_from_ldos(p: LdosProfile, n_max: int) -> FidelityCurve:
    """Fidelity reconstructed from the LDOS by Fourier sum:
    O(n) = |sum_m eta_m exp(-i (phi_o - phi'_m) n)|^2."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    diffs = p.center_phase - p.phases
    ns = np.arange(n_max + 1, dtype=float)
    amps = np.exp(-1j * np.outer(ns, diffs)) @ p.weights.astype(complex)
    return FidelityCurve(n_max=n_max, values=np.abs(amps) ** 2)
