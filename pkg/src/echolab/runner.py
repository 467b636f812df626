"""Experiment orchestration: declarative configs, recipes, CSV/JSON emission.

A config names one unperturbed map, one perturbation eigenbasis, a list of
perturbation strengths and the bookkeeping seeds.  Everything derives from
`master_seed` through fixed stream ids (model draw, perturbation basis,
initial-state shuffle, shot noise), so a re-run reproduces every number
exactly; the report timestamp is the only non-deterministic field.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .ensembles import EnsembleSeed, sample_cue
from .errors import (
    ConfigError,
    CurveTooShortError,
    FitDivergedError,
    FlatCurveError,
    WindowTooSmallError,
)
from .fidelity import (
    FidelityCurve,
    ProtocolRun,
    RateFit,
    fidelity_curves,
    fit_rate,
    sampled_fidelity,
    saturation_level,
    theory_curve,
)
from .models import (
    GuePropagatorParams,
    KickedTopParams,
    build_gue_propagator,
    build_kicked_top,
    coordinate_eigenbasis,
)
from .perturbations import (
    Computational,
    CoordinateBasis,
    FgrPrediction,
    PerturbationSpec,
    RandomCue,
    fgr_rate,
)
from .spectral import (
    POISSON,
    WIGNER_GUE,
    SpacingHistogram,
    ks_distance,
    ldos,
    lorentzian_fit,
    nn_spacings,
    reference_pdf,
)

STREAM_MODEL = 0
STREAM_PERTURBATION = 1
STREAM_STATES = 2
STREAM_SHOTS_BASE = 1000  # + 100 * delta_index + checkpoint_index

MODEL_KINDS = ("cue", "gue", "kicked_top")
BASIS_KINDS = ("computational", "jz", "jy", "random_cue")

RECIPE_SEED = 20260810
RECIPE_NAMES = ("fig1", "fig2", "fig2-inset", "fig3", "fig3-inset")


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    n_q: int
    tau: Optional[float] = None
    j: Optional[float] = None
    k: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    delta_list: tuple[float, ...]
    basis: str = "computational"
    n_max: Optional[int] = None
    n_states: int = 50
    shots: Optional[int] = None
    master_seed: int = 0
    spacings: bool = False
    ldos_states: int = 0


@dataclass(frozen=True)
class LdosSummary:
    widths: tuple[float, ...]
    mean_width: float
    eigenstate_indices: tuple[int, ...]


@dataclass(frozen=True)
class DeltaResult:
    delta: float
    curve: FidelityCurve
    prediction: FgrPrediction
    theory: FidelityCurve
    fit: Optional[RateFit]
    fit_error: Optional[str]
    saturation: Optional[float]
    sampled: Optional[list[ProtocolRun]] = None
    ldos: Optional[LdosSummary] = None


@dataclass(frozen=True)
class SpacingReport:
    histogram: SpacingHistogram
    ks_poisson: float
    ks_wigner: float


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    n_max: int
    seeds: dict
    state_indices: tuple[int, ...]
    results: list[DeltaResult]
    spacings: Optional[SpacingReport]
    meta: dict


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """Check every field, filling derived ones (j for the kicked top).

    Raises ConfigError carrying one message per offending field.
    """
    problems = []
    m = config.model
    if m.kind not in MODEL_KINDS:
        problems.append(f"model.kind: expected one of {MODEL_KINDS}, got {m.kind!r}")
    if not isinstance(m.n_q, int) or not (1 <= m.n_q <= 24):
        problems.append(f"model.n_q: expected an integer in [1, 24], got {m.n_q!r}")
        raise ConfigError(problems)
    n = 2**m.n_q
    model = m
    if m.kind == "gue":
        if m.tau is None or not (math.isfinite(m.tau) and m.tau >= 0.0):
            problems.append(f"model.tau: expected a finite value >= 0, got {m.tau!r}")
    if m.kind == "kicked_top":
        if m.k is None or not math.isfinite(m.k):
            problems.append(f"model.k: expected a finite kick strength, got {m.k!r}")
        expected_j = (n - 1) / 2.0
        if m.j is None:
            model = dataclasses.replace(m, j=expected_j)
        elif m.j != expected_j:
            problems.append(
                f"model.j: must equal (2^n_q - 1)/2 = {expected_j} so dimensions match, got {m.j}"
            )
    if config.basis not in BASIS_KINDS:
        problems.append(f"basis: expected one of {BASIS_KINDS}, got {config.basis!r}")
    elif config.basis in ("jz", "jy") and m.kind != "kicked_top":
        problems.append(f"basis: {config.basis!r} requires the kicked_top model")
    for i, d in enumerate(config.delta_list):
        if not (math.isfinite(d) and d >= 0.0):
            problems.append(f"delta_list[{i}]: expected a finite value >= 0, got {d!r}")
    if config.n_max is not None and (not isinstance(config.n_max, int) or config.n_max < 1):
        problems.append(f"n_max: expected a positive integer or null, got {config.n_max!r}")
    if not isinstance(config.n_states, int) or not (1 <= config.n_states <= n):
        problems.append(f"n_states: expected an integer in [1, {n}], got {config.n_states!r}")
    if config.shots is not None and (not isinstance(config.shots, int) or config.shots < 1):
        problems.append(f"shots: expected a positive integer or null, got {config.shots!r}")
    if not isinstance(config.master_seed, int) or not (0 <= config.master_seed < 2**64):
        problems.append(f"master_seed: expected a 64-bit unsigned integer, got {config.master_seed!r}")
    if not isinstance(config.ldos_states, int) or not (0 <= config.ldos_states <= n):
        problems.append(f"ldos_states: expected an integer in [0, {n}], got {config.ldos_states!r}")
    if problems:
        raise ConfigError(problems)
    return dataclasses.replace(config, model=model, delta_list=tuple(config.delta_list))


def default_n_max(config: ExperimentConfig) -> int:
    """ceil(3 ln(N) / Gamma_min), so the slowest curve reaches its plateau.

    Falls back to 100 when no delta produces a positive predicted rate.
    """
    n = 2**config.model.n_q
    gammas = [
        fgr_rate(PerturbationSpec(config.model.n_q, d)).gamma
        for d in config.delta_list
        if d > 0.0
    ]
    if not gammas:
        return 100
    return int(math.ceil(3.0 * math.log(n) / min(gammas)))


def _build_model(config: ExperimentConfig) -> np.ndarray:
    m = config.model
    n = 2**m.n_q
    if m.kind == "cue":
        return sample_cue(n, EnsembleSeed(config.master_seed, STREAM_MODEL))
    if m.kind == "gue":
        seed = EnsembleSeed(config.master_seed, STREAM_MODEL)
        return build_gue_propagator(GuePropagatorParams(tau=m.tau, seed=seed), n)
    return build_kicked_top(KickedTopParams(j=m.j, k=m.k))


def _build_basis(config: ExperimentConfig):
    if config.basis == "computational":
        return Computational()
    if config.basis == "random_cue":
        return RandomCue(EnsembleSeed(config.master_seed, STREAM_PERTURBATION))
    axis = config.basis[-1]  # "jz" -> "z", "jy" -> "y"
    return CoordinateBasis(coordinate_eigenbasis(config.model.j, axis))


def _sample_checkpoints(n_max: int, count: int = 8) -> list[int]:
    pts = np.unique(np.round(np.linspace(1, n_max, min(count, n_max))).astype(int))
    return [int(p) for p in pts]


def run(config: ExperimentConfig) -> ExperimentReport:
    """Execute one experiment config and collect curves, fits and statistics."""
    config = validate_config(config)
    n_q = config.model.n_q
    n = 2**n_q
    n_max = config.n_max if config.n_max is not None else default_n_max(config)

    u = _build_model(config)
    basis = _build_basis(config)

    shuffle_rng = EnsembleSeed(config.master_seed, STREAM_STATES).rng()
    state_indices = tuple(int(i) for i in shuffle_rng.permutation(n)[: config.n_states])
    states = np.zeros((n, config.n_states), dtype=complex)
    states[list(state_indices), np.arange(config.n_states)] = 1.0

    eigenstate_indices = tuple(
        int(i) for i in np.unique(np.round(np.linspace(0, n - 1, config.ldos_states)).astype(int))
    ) if config.ldos_states > 0 else ()

    results = []
    from .perturbations import build_perturbation  # local alias keeps import block tidy

    for di, delta in enumerate(config.delta_list):
        spec = PerturbationSpec(n_q=n_q, delta=delta, basis=basis)
        prediction = fgr_rate(spec)
        up = build_perturbation(spec)
        curve = fidelity_curves(u, up, states, n_max)
        theory = theory_curve(prediction.gamma, n_max, n)

        fit, fit_error = None, None
        try:
            fit = fit_rate(curve, n)
        except (FlatCurveError, WindowTooSmallError) as exc:
            fit_error = f"{type(exc).__name__}: {exc}"

        saturation = None
        if prediction.gamma > 0.0:
            try:
                saturation = saturation_level(curve, prediction.gamma, n)
            except CurveTooShortError:
                pass

        sampled = None
        if config.shots is not None:
            sampled = []
            for ci, ncheck in enumerate(_sample_checkpoints(n_max)):
                seed = EnsembleSeed(
                    config.master_seed, STREAM_SHOTS_BASE + 100 * di + ci
                )
                sampled.append(
                    sampled_fidelity(u, up, state_indices[0], ncheck, config.shots, seed)
                )

        ldos_summary = None
        if eigenstate_indices:
            widths = []
            for idx in eigenstate_indices:
                try:
                    widths.append(lorentzian_fit(ldos(u, up, idx)).width)
                except FitDivergedError:
                    continue
            if widths:
                ldos_summary = LdosSummary(
                    widths=tuple(widths),
                    mean_width=float(np.mean(widths)),
                    eigenstate_indices=eigenstate_indices,
                )

        results.append(
            DeltaResult(
                delta=delta,
                curve=curve,
                prediction=prediction,
                theory=theory,
                fit=fit,
                fit_error=fit_error,
                saturation=saturation,
                sampled=sampled,
                ldos=ldos_summary,
            )
        )

    spacing_report = None
    if config.spacings:
        hist = nn_spacings(u)
        spacing_report = SpacingReport(
            histogram=hist,
            ks_poisson=ks_distance(hist, POISSON),
            ks_wigner=ks_distance(hist, WIGNER_GUE),
        )

    seeds = {
        "master_seed": config.master_seed,
        "model_stream": STREAM_MODEL,
        "perturbation_stream": STREAM_PERTURBATION,
        "state_shuffle_stream": STREAM_STATES,
        "shot_stream_base": STREAM_SHOTS_BASE,
    }
    meta = {"timestamp": datetime.now(timezone.utc).isoformat(), "version": __version__}
    return ExperimentReport(
        config=config,
        n_max=n_max,
        seeds=seeds,
        state_indices=state_indices,
        results=results,
        spacings=spacing_report,
        meta=meta,
    )


# --- serialization -------------------------------------------------------

def config_to_dict(config: ExperimentConfig) -> dict:
    m = config.model
    model = {"kind": m.kind, "n_q": m.n_q}
    if m.kind == "gue":
        model["tau"] = m.tau
    if m.kind == "kicked_top":
        model["j"] = m.j
        model["k"] = m.k
    return {
        "model": model,
        "perturbation": {"basis": config.basis},
        "delta_list": list(config.delta_list),
        "n_max": config.n_max,
        "n_states": config.n_states,
        "shots": config.shots,
        "master_seed": config.master_seed,
        "spacings": config.spacings,
        "ldos_states": config.ldos_states,
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        model_data = dict(data["model"])
        n_q = model_data.get("n_q")
        if n_q is None and "N" in model_data:
            n = model_data["N"]
            n_q = int(n).bit_length() - 1
            if 2**n_q != n:
                raise ConfigError([f"model.N: {n} is not a power of two"])
        model = ModelConfig(
            kind=model_data.get("kind"),
            n_q=n_q,
            tau=model_data.get("tau"),
            j=model_data.get("j"),
            k=model_data.get("k"),
        )
        config = ExperimentConfig(
            model=model,
            delta_list=tuple(data.get("delta_list", ())),
            basis=data.get("perturbation", {}).get("basis", "computational"),
            n_max=data.get("n_max"),
            n_states=data.get("n_states", 50),
            shots=data.get("shots"),
            master_seed=data.get("master_seed", 0),
            spacings=data.get("spacings", False),
            ldos_states=data.get("ldos_states", 0),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError([f"malformed config: {exc}"]) from exc
    return validate_config(config)


def recipe(name: str) -> dict[str, ExperimentConfig]:
    """Built-in experiment grids, keyed by output label."""
    if name == "fig1":
        return {
            "fig1": ExperimentConfig(
                model=ModelConfig(kind="cue", n_q=10),
                delta_list=(0.1, 0.2, 0.4),
                n_states=50,
                master_seed=RECIPE_SEED,
            )
        }
    if name == "fig2":
        return {
            f"tau-{tau}": ExperimentConfig(
                model=ModelConfig(kind="gue", n_q=10, tau=tau),
                delta_list=(0.3,),
                n_states=50,
                master_seed=RECIPE_SEED,
            )
            for tau in (0.001, 0.01, 0.1, 100.0)
        }
    if name == "fig2-inset":
        return {
            "fig2-inset": ExperimentConfig(
                model=ModelConfig(kind="gue", n_q=10, tau=100.0),
                delta_list=(),
                n_states=1,
                spacings=True,
                master_seed=RECIPE_SEED,
            )
        }
    if name == "fig3":
        top = {"k12": 12.0, "k1": 1.0}
        deltas = {"k12": (0.1, 0.3), "k1": (0.1,)}
        return {
            f"{label}-{basis}": ExperimentConfig(
                model=ModelConfig(kind="kicked_top", n_q=10, k=k),
                delta_list=deltas[label],
                basis=basis,
                n_states=50,
                master_seed=RECIPE_SEED,
            )
            for label, k in top.items()
            for basis in ("jz", "jy")
        }
    if name == "fig3-inset":
        return {
            "fig3-inset": ExperimentConfig(
                model=ModelConfig(kind="kicked_top", n_q=10, k=1.0),
                delta_list=(0.1, 0.3),
                basis="random_cue",
                n_states=50,
                master_seed=RECIPE_SEED,
            )
        }
    raise ConfigError([f"recipe: expected one of {RECIPE_NAMES}, got {name!r}"])


# --- emission ------------------------------------------------------------

def _f17(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"refusing to serialize non-finite value {x}")
    return format(float(x), ".17g")


def _json_encode(value, indent: int) -> str:
    pad = "  " * indent
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _f17(value)
    if isinstance(value, str):
        import json as _json

        return _json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        inner = ",\n".join(
            f'{pad}  {_json_encode(str(k), 0)}: {_json_encode(v, indent + 1)}'
            for k, v in value.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if len(value) == 0:
            return "[]"
        inner = ",\n".join(f"{pad}  {_json_encode(v, indent + 1)}" for v in value)
        return "[\n" + inner + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def dumps_json(obj) -> str:
    """JSON text with floats at 17 significant digits (lossless for doubles)."""
    return _json_encode(obj, 0) + "\n"


def report_to_dict(report: ExperimentReport) -> dict:
    results = []
    for r in report.results:
        entry = {
            "delta": r.delta,
            "prediction": {
                "gamma": r.prediction.gamma,
                "sigma2": r.prediction.sigma2,
                "delta_level": r.prediction.delta_level,
                "lambda_var": r.prediction.lambda_var,
            },
            "fit": None
            if r.fit is None
            else {
                "gamma_fit": r.fit.gamma_fit,
                "r2": r.fit.r2,
                "window": list(r.fit.window),
            },
            "fit_error": r.fit_error,
            "saturation": r.saturation,
        }
        if r.sampled is not None:
            entry["sampled"] = [
                {
                    "prep": s.prep,
                    "shots": s.shots,
                    "estimate": s.estimate,
                    "stderr": s.stderr,
                }
                for s in r.sampled
            ]
        if r.ldos is not None:
            entry["ldos"] = {
                "eigenstate_indices": list(r.ldos.eigenstate_indices),
                "widths": list(r.ldos.widths),
                "mean_width": r.ldos.mean_width,
            }
        results.append(entry)
    out = {
        "meta": report.meta,
        "config": config_to_dict(report.config),
        "n_max": report.n_max,
        "seeds": report.seeds,
        "state_indices": list(report.state_indices),
        "results": results,
    }
    if report.spacings is not None:
        out["spacings"] = {
            "n_levels": report.spacings.histogram.n_levels,
            "ks_poisson": report.spacings.ks_poisson,
            "ks_wigner": report.spacings.ks_wigner,
        }
    return out


def emit(report: ExperimentReport, out_dir) -> list[Path]:
    """Write curves.csv, spacings.csv and report.json into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    curves_path = out_dir / "curves.csv"
    lines = ["delta,n,o_mean,o_std,o_theory"]
    for r in report.results:
        std = r.curve.std if r.curve.std is not None else np.zeros_like(r.curve.values)
        for n_iter in range(report.n_max + 1):
            lines.append(
                ",".join(
                    (
                        _f17(r.delta),
                        str(n_iter),
                        _f17(r.curve.values[n_iter]),
                        _f17(std[n_iter]),
                        _f17(r.theory.values[n_iter]),
                    )
                )
            )
    curves_path.write_text("\n".join(lines) + "\n")
    written.append(curves_path)

    spacings_path = out_dir / "spacings.csv"
    lines = ["s,count,poisson_pdf,wigner_pdf"]
    if report.spacings is not None:
        h = report.spacings.histogram
        centers = (h.bin_edges[:-1] + h.bin_edges[1:]) / 2.0
        for c, cnt in zip(centers, h.counts):
            lines.append(
                ",".join(
                    (
                        _f17(c),
                        str(int(cnt)),
                        _f17(float(reference_pdf(POISSON, c))),
                        _f17(float(reference_pdf(WIGNER_GUE, c))),
                    )
                )
            )
    spacings_path.write_text("\n".join(lines) + "\n")
    written.append(spacings_path)

    report_path = out_dir / "report.json"
    report_path.write_text(dumps_json(report_to_dict(report)))
    written.append(report_path)
    return written
