"""Fidelity-decay experiments and exponential-rate fitting.

The observable is O(n) = |<psi_u(n)|psi_p(n)>|^2 with psi_u evolved by the
map U and psi_p by the perturbed map U_p U.  Forward evolution keeps two
state vectors and costs two matrix-vector products per step; the echo
variant applies the literal measurement ordering (U^dagger)^n (U_p U)^n and
serves as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensembles import EnsembleSeed
from .errors import (
    CurveTooShortError,
    DimMismatchError,
    EmptyListError,
    FlatCurveError,
    WindowTooSmallError,
)

NORM_TOL = 1e-12


@dataclass(frozen=True)
class FidelityCurve:
    """Per-iteration overlap samples; values[0] = 1 for normalized input."""

    n_max: int
    values: np.ndarray
    std: Optional[np.ndarray] = None
    per_state: Optional[np.ndarray] = None  # shape (n_states, n_max + 1)


@dataclass(frozen=True)
class RateFit:
    """Log-linear exponential fit: gamma_fit = -slope of ln O(n) on the window."""

    gamma_fit: float
    r2: float
    window: tuple[int, int]


@dataclass(frozen=True)
class ProtocolRun:
    """Shot-sampled echo measurement for one basis-state preparation."""

    prep: str
    shots: int
    estimate: float
    stderr: float


def _check_pair(u: np.ndarray, up: np.ndarray) -> int:
    u = np.asarray(u)
    up = np.asarray(up)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimMismatchError(f"U must be square, got {u.shape}")
    if up.shape != u.shape:
        raise DimMismatchError(f"U_p shape {up.shape} does not match U {u.shape}")
    return u.shape[0]


def _check_states(states: np.ndarray, n: int) -> np.ndarray:
    states = np.asarray(states, dtype=complex)
    if states.ndim != 2 or states.shape[0] != n:
        raise DimMismatchError(f"states must be {n} x k, got {states.shape}")
    norms = np.linalg.norm(states, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-9:
        raise ValueError("initial states must be normalized")
    return states


def _overlap_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(np.sum(a.conj() * b, axis=0)) ** 2


def fidelity_curves(
    u: np.ndarray, up: np.ndarray, states: np.ndarray, n_max: int
) -> FidelityCurve:
    """Forward-pair decay for a batch of initial states (columns of `states`).

    Each step advances both vectors by one matrix-vector product; matrix
    powers are never formed.  Returns the index-ordered pointwise mean and
    standard deviation over states, with the per-state curves attached.
    """
    n = _check_pair(u, up)
    states = _check_states(states, n)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    w = np.asarray(up, dtype=complex) @ np.asarray(u, dtype=complex)
    psi_u = states.copy()
    psi_p = states.copy()
    vals = np.empty((n_max + 1, states.shape[1]))
    vals[0] = _overlap_sq(psi_u, psi_p)
    for step in range(1, n_max + 1):
        psi_u = u @ psi_u
        psi_p = w @ psi_p
        vals[step] = _overlap_sq(psi_u, psi_p)
    return FidelityCurve(
        n_max=n_max,
        values=vals.mean(axis=1),
        std=vals.std(axis=1),
        per_state=np.ascontiguousarray(vals.T),
    )


def fidelity_curve(
    u: np.ndarray, up: np.ndarray, psi0: np.ndarray, n_max: int
) -> FidelityCurve:
    """Forward-pair decay O(n) = |<U^n psi0|(U_p U)^n psi0>|^2 for one state."""
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim != 1:
        raise DimMismatchError("psi0 must be a vector")
    batch = fidelity_curves(u, up, psi0[:, None], n_max)
    return FidelityCurve(n_max=n_max, values=batch.values)


def echo_curve(
    u: np.ndarray, up: np.ndarray, psi0: np.ndarray, n_max: int
) -> FidelityCurve:
    """Echo-ordered decay |<psi0|(U^dagger)^n (U_p U)^n psi0>|^2.

    Mathematically identical to fidelity_curve, but evaluated in the literal
    protocol ordering (n backward applications per sample), so it is an
    independent O(n_max^2) cross-check of the forward recursion.
    """
    n = _check_pair(u, up)
    psi0 = _check_states(np.asarray(psi0, dtype=complex)[:, None], n)[:, 0]
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    w = np.asarray(up, dtype=complex) @ np.asarray(u, dtype=complex)
    udag = np.asarray(u, dtype=complex).conj().T
    vals = np.empty(n_max + 1)
    vals[0] = abs(np.vdot(psi0, psi0)) ** 2
    phi = psi0.copy()
    for step in range(1, n_max + 1):
        phi = w @ phi
        back = phi
        for _ in range(step):
            back = udag @ back
        vals[step] = abs(np.vdot(psi0, back)) ** 2
    return FidelityCurve(n_max=n_max, values=vals)


def sampled_fidelity(
    u: np.ndarray,
    up: np.ndarray,
    prep_state_index: int,
    n: int,
    shots: int,
    seed: EnsembleSeed,
) -> ProtocolRun:
    """Shot-sampled echo value at iteration n for one basis-state preparation.

    Simulates the measurement protocol: prepare |i> by flipping the set bits
    of `prep_state_index`, run (U_p U)^n then (U^dagger)^n, undo the
    preparation and sample the population of |0...0> with `shots` Bernoulli
    trials on the exact amplitude.
    """
    dim = _check_pair(u, up)
    if not (0 <= prep_state_index < dim):
        raise DimMismatchError(f"prep_state_index {prep_state_index} out of range for N = {dim}")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    w = np.asarray(up, dtype=complex) @ np.asarray(u, dtype=complex)
    udag = np.asarray(u, dtype=complex).conj().T
    psi = np.zeros(dim, dtype=complex)
    psi[prep_state_index] = 1.0
    for _ in range(n):
        psi = w @ psi
    for _ in range(n):
        psi = udag @ psi
    # undoing the preparation maps <0...0| onto <i|
    p = min(max(abs(psi[prep_state_index]) ** 2, 0.0), 1.0)
    successes = int(seed.rng().binomial(shots, p))
    estimate = successes / shots
    n_q = dim.bit_length() - 1
    flips = [b for b in range(n_q) if (prep_state_index >> b) & 1]
    return ProtocolRun(
        prep=f"basis state {prep_state_index} (X on qubits {flips})",
        shots=shots,
        estimate=estimate,
        stderr=float(np.sqrt(estimate * (1.0 - estimate) / shots)),
    )


def average_curves(curves: list[FidelityCurve]) -> FidelityCurve:
    """Pointwise mean and std over curves, reduced in index order."""
    if not curves:
        raise EmptyListError("no curves to average")
    n_max = curves[0].n_max
    if any(c.n_max != n_max for c in curves):
        raise DimMismatchError("curves have differing n_max")
    stack = np.stack([c.values for c in curves], axis=0)
    return FidelityCurve(
        n_max=n_max,
        values=stack.mean(axis=0),
        std=stack.std(axis=0),
        per_state=stack,
    )


def _fit_window(values: np.ndarray, n: int) -> int:
    threshold = max(5.0 / n, 0.02)
    below = np.nonzero(values[1:] < threshold)[0]
    if below.size == 0:
        return values.size - 1  # capped at n_max
    return int(below[0]) + 1


def fit_rate(curve: FidelityCurve, n: int) -> RateFit:
    """Least-squares exponential fit of the decay.

    The window runs from 1 to the first iteration where the curve drops
    below max(5/N, 0.02) (capped at n_max), which keeps the fit clear of the
    1/N saturation plateau and of deep-decay noise.  Raises FlatCurveError
    for a curve that never decays and WindowTooSmallError when fewer than 4
    points remain.
    """
    values = np.asarray(curve.values, dtype=float)
    if values.size < 2 or values[1] >= 1.0:
        raise FlatCurveError("curve shows no decay at iteration 1")
    n_hi = _fit_window(values, n)
    if n_hi < 4:
        raise WindowTooSmallError(
            f"fit window [1, {n_hi}] has fewer than 4 points (decay too fast)"
        )
    ns = np.arange(1, n_hi + 1, dtype=float)
    window_vals = values[1 : n_hi + 1]
    positive = window_vals > 0.0
    if not np.all(positive):
        ns, window_vals = ns[positive], window_vals[positive]
        if ns.size < 4:
            raise WindowTooSmallError("fewer than 4 positive points in fit window")
    logs = np.log(window_vals)
    slope, intercept = np.polyfit(ns, logs, 1)
    resid = logs - (slope * ns + intercept)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(logs - logs.mean(), logs - logs.mean()))
    r2 = 0.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateFit(gamma_fit=float(-slope), r2=r2, window=(1, n_hi))


def theory_curve(gamma: float, n_max: int, n: int) -> FidelityCurve:
    """Golden-rule reference exp(-gamma n), floored at the 1/N plateau."""
    if gamma < 0.0:
        raise ValueError("gamma must be >= 0")
    ns = np.arange(n_max + 1, dtype=float)
    return FidelityCurve(n_max=n_max, values=np.maximum(np.exp(-gamma * ns), 1.0 / n))


def saturation_level(curve: FidelityCurve, gamma: float, n: int) -> float:
    """Mean of the curve over the plateau window n in [2 ln(N)/gamma, n_max]."""
    if gamma <= 0.0:
        raise ValueError("gamma must be > 0")
    onset = 2.0 * np.log(n) / gamma
    if curve.n_max <= 3.0 * np.log(n) / gamma:
        raise CurveTooShortError(
            f"curve ends at {curve.n_max}, needs > {3.0 * np.log(n) / gamma:.1f}"
        )
    return float(np.mean(curve.values[int(np.ceil(onset)) :]))
