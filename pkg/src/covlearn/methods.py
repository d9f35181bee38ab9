"""Registry mapping method tags to solver adapters with a uniform outcome.

The Monte-Carlo engine and the CLI dispatch through this table so every
method sees identical data and reports comparable telemetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import baselines
from .baselines import BaselineConfig
from .clbcd import ClBcdConfig, run_clbcd
from .clomp import run_clomp
from .model import Dictionary, noise_mle, provisional_mle, pseudo_inverse_apply, sample_covariance
from .scenario import grid_angles_deg, steering_matrix
from .sparsity import SupportSet

FINE_GRID_POINTS = 18001  # 0.01 deg resolution for the single-source searcher

METHOD_DESCRIPTIONS = {
    "cl-bcd": "block-coordinate descent with fixed-point power updates",
    "cl-omp": "greedy conditional-likelihood pursuit",
    "iaa": "iterative adaptive approach power recursion",
    "samv2": "power-ratio update (b=1) with trace-ratio noise rule",
    "sbl": "power-ratio update (b=1) with support-projector noise refit",
    "sbl1": "power-ratio update with square-root exponent (b=1/2)",
    "msbl": "EM iteration on signal powers, known noise variance",
    "cwo": "cyclic coordinatewise likelihood descent, known noise variance",
    "somp": "simultaneous orthogonal matching pursuit",
    "music": "subspace pseudospectrum peaks on the steering grid",
    "mle1": "single-source exhaustive grid maximum likelihood",
}

METHOD_TAGS = tuple(METHOD_DESCRIPTIONS)


@dataclass(frozen=True)
class MethodSpec:
    """A method tag plus per-method solver overrides."""

    tag: str
    max_iter: int = 500
    tol: float = 0.5e-4
    b: float | None = None
    known_sigma2: float | None = None
    prune_threshold: float = 0.0

    def __post_init__(self):
        if self.tag not in METHOD_TAGS:
            raise ValueError(
                f"unknown method tag {self.tag!r}; supported: {', '.join(METHOD_TAGS)}"
            )


@dataclass(frozen=True)
class TrialOutcome:
    """What one method produced on one trial."""

    support: SupportSet | None
    gamma: np.ndarray | None
    sigma2: float | None
    iterations: int
    theta_deg: tuple | None = None
    powers: np.ndarray | None = None


def list_method_tags() -> tuple:
    return METHOD_TAGS


def resolve_methods(methods) -> tuple:
    """Normalize a mix of tags and MethodSpec objects into MethodSpecs."""
    specs = []
    for item in methods:
        specs.append(item if isinstance(item, MethodSpec) else MethodSpec(tag=str(item)))
    if not specs:
        raise ValueError("at least one method is required")
    return tuple(specs)


def _baseline_config(spec: MethodSpec, peak: bool, noise_var: float, b: float | None = None) -> BaselineConfig:
    known = spec.known_sigma2 if spec.known_sigma2 is not None else noise_var
    return BaselineConfig(
        method=spec.tag,
        max_iter=spec.max_iter,
        tol=spec.tol,
        b=b if b is not None else (spec.b if spec.b is not None else 1.0),
        known_sigma2=known,
        peak=peak,
    )


def solve_trial(
    spec: MethodSpec,
    Y: np.ndarray,
    dictionary: Dictionary,
    k: int,
    peak: bool,
    noise_var: float,
    grid_deg: np.ndarray | None = None,
) -> TrialOutcome:
    """Run one method on one batch of snapshots."""
    tag = spec.tag

    if tag == "cl-bcd":
        cfg = ClBcdConfig(
            max_iter=spec.max_iter, tol=spec.tol, peak=peak, prune_threshold=spec.prune_threshold
        )
        res = run_clbcd(Y, dictionary, k, cfg)
        return TrialOutcome(res.support, res.gamma, res.sigma2, res.iterations)

    if tag == "cl-omp":
        res = run_clomp(Y, dictionary, k)
        return TrialOutcome(res.support, res.gamma, res.sigma2, res.iterations)

    if tag in ("iaa", "samv2", "sbl", "sbl1", "msbl", "cwo"):
        forced_b = {"samv2": 1.0, "sbl1": 0.5}.get(tag)
        cfg = _baseline_config(spec, peak, noise_var, b=forced_b)
        runner = {
            "iaa": baselines.run_iaa,
            "samv2": baselines.run_samv2,
            "sbl": baselines.run_sbl,
            "sbl1": baselines.run_sbl,
            "msbl": baselines.run_msbl,
            "cwo": baselines.run_cwo,
        }[tag]
        res = runner(Y, dictionary, k, cfg)
        return TrialOutcome(res.support, res.gamma, res.sigma2, res.iterations)

    if tag == "somp":
        support = baselines.somp(Y, dictionary, k)
        sub = dictionary.take(support.indices)
        rows = pseudo_inverse_apply(sub, np.asarray(Y, dtype=np.complex128))
        gamma = np.zeros(dictionary.n_atoms)
        gamma[list(support.indices)] = np.mean(np.abs(rows) ** 2, axis=1)
        sigma2 = noise_mle(sample_covariance(Y), sub, dictionary.n_sensors)
        return TrialOutcome(support, gamma, sigma2, iterations=k)

    if tag == "music":
        scm = sample_covariance(Y)
        support = baselines.music_doas(scm, dictionary, k)
        evals = np.linalg.eigvalsh(scm)
        sigma2 = float(np.mean(evals[: dictionary.n_sensors - k]))
        return TrialOutcome(support, None, sigma2, iterations=1)

    if tag == "mle1":
        if k != 1:
            raise ValueError("mle1 handles exactly one source")
        scm = sample_covariance(Y)
        theta = baselines.mle_single_source(scm, grid_angles_deg(FINE_GRID_POINTS))
        atom = steering_matrix(dictionary.n_sensors, [theta])
        gamma_src, sigma2 = provisional_mle(scm, atom, dictionary.n_sensors)
        return TrialOutcome(
            support=None,
            gamma=None,
            sigma2=sigma2,
            iterations=1,
            theta_deg=(theta,),
            powers=gamma_src,
        )

    raise ValueError(f"unknown method tag {tag!r}")  # pragma: no cover - MethodSpec validates
