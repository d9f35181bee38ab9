"""Experiment generation, recovery metrics, and the seeded Monte-Carlo engine.

Two scenario kinds are supported: "gaussian-ssr" (unit-norm random complex
Gaussian dictionary, random K-row support per trial, first-source SNR
anchor) and "ula-doa" (half-wavelength uniform linear array, fixed true
directions that may lie off the steering grid, mean-SNR anchor).

Each trial owns an RNG derived from (master_seed, trial_index); the same
per-trial source/noise draws are reused across the SNR sweep with powers
rescaled, so sweeps are smooth and results do not depend on execution
order or thread count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .model import Dictionary

SCENARIO_KINDS = ("gaussian-ssr", "ula-doa")


# ---------------------------------------------------------------------------
# dictionaries and steering vectors
# ---------------------------------------------------------------------------


def ula_steering(n_sensors: int, theta_deg: float) -> np.ndarray:
    """Steering vector exp(j pi n sin(theta)) of a half-wavelength ULA.

    ||a(theta)||^2 == n_sensors exactly; theta must lie in [-90, 90] degrees.
    """
    if not -90.0 <= theta_deg <= 90.0:
        raise ValueError(f"angle {theta_deg} deg outside [-90, 90]")
    n = np.arange(n_sensors)
    return np.exp(1j * np.pi * n * np.sin(np.deg2rad(theta_deg)))


def steering_matrix(n_sensors: int, angles_deg) -> np.ndarray:
    """Stack of ULA steering vectors, one column per angle."""
    angles = np.atleast_1d(np.asarray(angles_deg, dtype=np.float64))
    if angles.size and (angles.min() < -90.0 or angles.max() > 90.0):
        raise ValueError("angles outside [-90, 90] deg")
    n = np.arange(n_sensors)[:, None]
    return np.exp(1j * np.pi * n * np.sin(np.deg2rad(angles))[None, :])


def grid_angles_deg(n_points: int) -> np.ndarray:
    """Uniform angle grid over [-90, 90] deg (1801 points gives 0.1 deg steps)."""
    if n_points < 2:
        raise ValueError("grid needs at least two points")
    return np.linspace(-90.0, 90.0, n_points)


def ula_grid(n_sensors: int, n_points: int) -> Dictionary:
    """Steering-vector dictionary over the uniform angle grid."""
    return Dictionary(steering_matrix(n_sensors, grid_angles_deg(n_points)), norm_mode="array")


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _gaussian_atoms(rng: np.random.Generator, n_sensors: int, n_atoms: int) -> np.ndarray:
    atoms = _complex_gaussian(rng, (n_sensors, n_atoms))
    return atoms / np.linalg.norm(atoms, axis=0)


def gaussian_dictionary(n_sensors: int, n_atoms: int, seed) -> Dictionary:
    """Unit-norm i.i.d. circular complex Gaussian dictionary (seeded)."""
    rng = np.random.default_rng(seed)
    return Dictionary(_gaussian_atoms(rng, n_sensors, n_atoms), norm_mode="unit")


# ---------------------------------------------------------------------------
# snapshot synthesis
# ---------------------------------------------------------------------------


def _source_chol(powers: np.ndarray, rho: float) -> np.ndarray:
    """Cholesky factor of the (possibly correlated) source covariance."""
    powers = np.asarray(powers, dtype=np.float64)
    s = np.sqrt(powers)
    corr = np.full((powers.size, powers.size), float(rho))
    np.fill_diagonal(corr, 1.0)
    cov = s[:, None] * corr * s[None, :]
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("source covariance is not positive semidefinite") from exc


def generate_snapshots(source_atoms, powers, rho, sigma2, n_snapshots, seed) -> np.ndarray:
    """Draw Y = A_s X + E with correlated Gaussian sources and white noise.

    Parameters
    ----------
    source_atoms : ndarray, shape (n_sensors, n_sources)
        Exact response vectors of the true sources (for off-grid
        directions these are the exact steering vectors, not grid atoms).
    powers : sequence of float
        Per-source signal powers.
    rho : float
        Common correlation coefficient between distinct sources.
    sigma2 : float
        White-noise variance per sensor.
    n_snapshots : int
        Number of snapshot columns L.
    seed : int | np.random.Generator
        Seed (or generator) for the draw; a fixed seed reproduces Y bitwise.
    """
    atoms = np.asarray(source_atoms, dtype=np.complex128)
    if atoms.ndim == 1:
        atoms = atoms[:, None]
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot")
    if not sigma2 >= 0:
        raise ValueError("noise variance must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chol = _source_chol(powers, rho)
    waveforms = chol @ _complex_gaussian(rng, (atoms.shape[1], n_snapshots))
    noise = np.sqrt(sigma2) * _complex_gaussian(rng, (atoms.shape[0], n_snapshots))
    return atoms @ waveforms + noise


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one Monte-Carlo experiment.

    snr_db anchors the first source directly in "gaussian-ssr" mode and
    the per-source dB average in "ula-doa" mode; source_offsets_db holds
    the per-source levels relative to the first source.
    """

    kind: str
    n_sensors: int
    n_atoms: int
    n_snapshots: int
    k: int
    snr_db: tuple
    source_offsets_db: tuple | None = None
    rho: float = 0.0
    noise_var: float = 1.0
    true_doas_deg: tuple | None = None
    seed: int = 0
    trials: int = 100
    peak: bool | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"kind must be one of {SCENARIO_KINDS}")
        if not 1 <= self.k < self.n_sensors:
            raise ValueError(f"k={self.k} must satisfy 1 <= k < n_sensors={self.n_sensors}")
        if self.n_sensors > self.n_atoms:
            raise ValueError(f"n_sensors={self.n_sensors} must not exceed n_atoms={self.n_atoms}")
        if self.n_snapshots < 1:
            raise ValueError("n_snapshots must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be below 1")
        snr = tuple(float(s) for s in self.snr_db)
        if not snr or not all(np.isfinite(snr)):
            raise ValueError("snr_db must be a non-empty list of finite values")
        object.__setattr__(self, "snr_db", snr)
        offsets = self.source_offsets_db
        offsets = (0.0,) * self.k if offsets is None else tuple(float(o) for o in offsets)
        if len(offsets) != self.k:
            raise ValueError(f"source_offsets_db must have k={self.k} entries")
        object.__setattr__(self, "source_offsets_db", offsets)
        if self.kind == "ula-doa":
            if self.true_doas_deg is None:
                raise ValueError("ula-doa scenarios require true_doas_deg")
            doas = tuple(float(t) for t in self.true_doas_deg)
            if len(doas) != self.k:
                raise ValueError(f"true_doas_deg must have k={self.k} entries")
            if any(not -90.0 <= t < 90.0 for t in doas):
                raise ValueError("true DOAs must lie in [-90, 90) deg")
            object.__setattr__(self, "true_doas_deg", doas)
        if self.peak is None:
            object.__setattr__(self, "peak", self.kind == "ula-doa")

    def source_powers(self, snr_db: float) -> np.ndarray:
        """Per-source powers for one SNR point, in config source order."""
        offsets = np.asarray(self.source_offsets_db)
        if self.kind == "gaussian-ssr":
            first_db = snr_db  # first-source anchor
        else:
            first_db = snr_db - offsets.mean()  # mean-of-dB anchor
        return self.noise_var * 10.0 ** ((first_db + offsets) / 10.0)


@dataclass(frozen=True)
class MetricsRecord:
    """Aggregated metrics for one (method, SNR) cell."""

    method: str
    snr_db: float
    trials: int
    per: float | None = None
    rmse_theta_deg: float | None = None
    nmse_gamma: float | None = None
    mean_iters: float | None = None
    mean_runtime_s: float | None = None
    failures: int = 0

    def __post_init__(self):
        for name in ("per", "rmse_theta_deg", "nmse_gamma", "mean_iters", "mean_runtime_s"):
            v = getattr(self, name)
            if v is not None and not np.isfinite(v):
                raise ValueError(f"{name} must be finite when present")
        if self.per is not None and not 0.0 <= self.per <= 1.0:
            raise ValueError("per must lie in [0, 1]")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def per_metric(est_supports, true_supports) -> float:
    """Fraction of trials whose estimated support equals the true one as a set."""
    est = list(est_supports)
    true = list(true_supports)
    if len(est) != len(true) or not est:
        raise ValueError("need matching, non-empty per-trial support lists")
    hits = sum(frozenset(e) == frozenset(t) for e, t in zip(est, true))
    return hits / len(est)


def _per_trial_pairs(est_list, truth):
    truth = list(truth)
    if len(truth) and np.ndim(truth[0]) == 0:
        truth = [truth] * len(list(est_list))
    return zip(est_list, truth)


def doa_rmse(est_angles, true_angles) -> float:
    """Root-mean-square, across trials, of ||sort(theta_hat) - sort(theta)||_2.

    per-trial errors are Euclidean norms over the K sources (no 1/K
    normalization); estimates and truths are matched by ascending angle.
    true_angles may be a single angle list (shared by all trials) or one
    list per trial.
    """
    errors2 = []
    for est, true in _per_trial_pairs(est_angles, true_angles):
        e = np.sort(np.asarray(est, dtype=np.float64))
        t = np.sort(np.asarray(true, dtype=np.float64))
        if e.shape != t.shape:
            raise ValueError("estimated and true angle counts differ")
        errors2.append(np.sum((e - t) ** 2))
    if not errors2:
        raise ValueError("no trials supplied")
    return float(np.sqrt(np.mean(errors2)))


def power_nmse(est_powers, true_powers) -> float:
    """Root NMSE sqrt(mean_t ||p_hat - p||^2 / ||p||^2) over trials."""
    ratios2 = []
    for est, true in _per_trial_pairs(est_powers, true_powers):
        e = np.asarray(est, dtype=np.float64)
        t = np.asarray(true, dtype=np.float64)
        if e.shape != t.shape:
            raise ValueError("estimated and true power counts differ")
        denom = np.linalg.norm(t)
        if denom == 0:
            raise ValueError("true powers must not all be zero")
        ratios2.append(np.sum((e - t) ** 2) / denom**2)
    if not ratios2:
        raise ValueError("no trials supplied")
    return float(np.sqrt(np.mean(ratios2)))


# ---------------------------------------------------------------------------
# Monte-Carlo engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _TrialCell:
    """Per (trial, method, snr) outcome summary."""

    ok: bool
    per_hit: bool | None = None
    theta_err2: float | None = None
    nmse_ratio2: float | None = None
    iterations: int | None = None
    runtime_s: float | None = None


def _evaluate_outcome(outcome, config, grid_deg, true_ctx):
    """Reduce one solver outcome to scalar per-trial metric contributions."""
    per_hit = None
    theta_err2 = None
    nmse_ratio2 = None

    if config.kind == "ula-doa":
        true_theta, true_powers_by_angle, true_grid_set = true_ctx
        if outcome.theta_deg is not None:
            theta_hat = np.sort(np.asarray(outcome.theta_deg, dtype=np.float64))
            powers_hat = (
                None if outcome.powers is None else np.asarray(outcome.powers, dtype=np.float64)
            )
        elif outcome.support is not None:
            idx = np.asarray(outcome.support.sorted_indices, dtype=int)
            theta_hat = grid_deg[idx]  # ascending index == ascending angle
            powers_hat = None if outcome.gamma is None else outcome.gamma[idx]
        else:
            return _TrialCell(ok=True, iterations=outcome.iterations)
        if theta_hat.size == true_theta.size:
            theta_err2 = float(np.sum((theta_hat - true_theta) ** 2))
            if powers_hat is not None:
                nmse_ratio2 = float(
                    np.sum((powers_hat - true_powers_by_angle) ** 2)
                    / np.sum(true_powers_by_angle**2)
                )
        if outcome.support is not None:
            per_hit = outcome.support.as_set() == true_grid_set
    else:
        true_support, gamma_true = true_ctx
        if outcome.support is not None:
            per_hit = outcome.support.as_set() == true_support
            if outcome.gamma is not None:
                gamma_hat = np.zeros_like(gamma_true)
                idx = list(outcome.support.indices)
                gamma_hat[idx] = outcome.gamma[idx]
                nmse_ratio2 = float(
                    np.sum((gamma_hat - gamma_true) ** 2) / np.sum(gamma_true**2)
                )

    return _TrialCell(
        ok=True,
        per_hit=per_hit,
        theta_err2=theta_err2,
        nmse_ratio2=nmse_ratio2,
        iterations=outcome.iterations,
    )


def run_monte_carlo(config: ScenarioConfig, methods, threads: int = 1):
    """Run every requested method on identical per-trial data; aggregate metrics.

    ``methods`` is a sequence of tags or MethodSpec objects. Returns one
    MetricsRecord per (method, snr_db), in that nesting order. Results are
    independent of ``threads``.
    """
    from .methods import resolve_methods, solve_trial

    specs = resolve_methods(methods)
    n, m, k = config.n_sensors, config.n_atoms, config.k
    L = config.n_snapshots

    if config.kind == "ula-doa":
        grid_dict = ula_grid(n, m)
        grid_deg = grid_angles_deg(m)
        src_atoms_fixed = steering_matrix(n, config.true_doas_deg)
        order = np.argsort(config.true_doas_deg)
        true_theta = np.asarray(config.true_doas_deg)[order]
        nearest = frozenset(int(np.argmin(np.abs(grid_deg - t))) for t in config.true_doas_deg)
    else:
        grid_dict = grid_deg = src_atoms_fixed = None
        order = true_theta = nearest = None

    def run_trial(t: int):
        rng = np.random.default_rng((config.seed, t))
        if config.kind == "gaussian-ssr":
            dictionary = Dictionary(_gaussian_atoms(rng, n, m), norm_mode="unit")
            support = rng.choice(m, size=k, replace=False)  # draw order = source order
            src_atoms = dictionary.atoms[:, support]
        else:
            dictionary = grid_dict
            support = None
            src_atoms = src_atoms_fixed
        waveforms = _complex_gaussian(rng, (k, L))
        noise = _complex_gaussian(rng, (n, L))

        cells = {}
        for si, snr in enumerate(config.snr_db):
            powers = config.source_powers(snr)
            if config.kind == "ula-doa":
                true_ctx = (true_theta, powers[order], nearest)
            else:
                gamma_true = np.zeros(m)
                gamma_true[support] = powers
                true_ctx = (frozenset(int(i) for i in support), gamma_true)
            Y = src_atoms @ (_source_chol(powers, config.rho) @ waveforms)
            Y = Y + np.sqrt(config.noise_var) * noise
            for mi, spec in enumerate(specs):
                t0 = time.perf_counter()
                try:
                    outcome = solve_trial(spec, Y, dictionary, k, config.peak, config.noise_var, grid_deg)
                    cell = _evaluate_outcome(outcome, config, grid_deg, true_ctx)
                    cell = replace(cell, runtime_s=time.perf_counter() - t0)
                except Exception:
                    cell = _TrialCell(ok=False)
                cells[(mi, si)] = cell
        return t, cells

    slots = [None] * config.trials
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for t, cells in pool.map(run_trial, range(config.trials)):
                slots[t] = cells
    else:
        for t in range(config.trials):
            slots[t] = run_trial(t)[1]

    records = []
    for mi, spec in enumerate(specs):
        for si, snr in enumerate(config.snr_db):
            col = [slots[t][(mi, si)] for t in range(config.trials)]
            good = [c for c in col if c.ok]
            failures = config.trials - len(good)
            hits = [c.per_hit for c in good if c.per_hit is not None]
            errs2 = [c.theta_err2 for c in good if c.theta_err2 is not None]
            ratios2 = [c.nmse_ratio2 for c in good if c.nmse_ratio2 is not None]
            iters = [c.iterations for c in good if c.iterations is not None]
            times = [c.runtime_s for c in good if c.runtime_s is not None]
            records.append(
                MetricsRecord(
                    method=spec.tag,
                    snr_db=snr,
                    trials=len(good),
                    per=(sum(hits) / len(hits)) if hits else None,
                    rmse_theta_deg=float(np.sqrt(np.mean(errs2))) if errs2 else None,
                    nmse_gamma=float(np.sqrt(np.mean(ratios2))) if ratios2 else None,
                    mean_iters=float(np.mean(iters)) if iters else None,
                    mean_runtime_s=float(np.mean(times)) if times else None,
                    failures=failures,
                )
            )
    return records
