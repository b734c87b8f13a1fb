"""Propagation of the heralded photon through a waveguide array and disorder ensembles.

Within the guided subspace the evolution is exact: each array supermode only
picks up the phase ``exp(i kappa z)``, so the photon-number distribution at any z
is evaluated directly, never by stepping.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RealizationError
from .grid import SpatialGrid, sinc_resample
from .herald import CouplingMatrix, HeraldedState, couple
from .modesolver import (DEFAULT_GRID_STEP, DEFAULT_PADDING, N_AL30, N_AL80, WAVELENGTH_UM, DisorderSpec,
                         GuidedModeSet, build_wga, solve_modes_fd)

CAPTURE_WARN_LEVEL = 0.9
DEFAULT_Z_MAX = 500.0
DEFAULT_Z_SAMPLES = 101


class LowCaptureWarning(UserWarning):
    """Less than 90% of the heralded photon couples into guided array modes."""


@dataclass(frozen=True)
class IntensityProfile:
    grid: SpatialGrid
    values: np.ndarray
    z: float
    captured_fraction: float

    @property
    def total(self) -> float:
        return float(self.grid.integrate(self.values))


class Propagator:
    """Heralded photon A expanded in array supermodes, ready to evaluate at any z.

    The guided-mode density ``R[i, j] = sum_{m,n} c[m, i] rho[m, n] conj(c[n, j])`` is
    diagonalised once, so that ``p(x, z) = sum_k w_k |sum_i V[i, k] exp(i kappa_i z) u_i(x)|^2``
    is manifestly nonnegative.
    """

    def __init__(self, heralded: HeraldedState, c: CouplingMatrix, wga_modes: GuidedModeSet):
        entries = c.entries
        rho = heralded.density_coefficients().T  # rho[m, n] pairs with c[m, i] and conj(c[n, j])
        if entries.shape != (rho.shape[0], wga_modes.n_modes):
            raise DomainError(
                f"coupling matrix {entries.shape} inconsistent with {rho.shape[0]} heralded modes "
                f"and {wga_modes.n_modes} array modes")
        r = entries.T @ rho @ entries.conj()
        r = 0.5 * (r + r.conj().T)
        w, v = np.linalg.eigh(r)
        keep = w > 1e-15 * max(float(w.max(initial=0.0)), 1e-300)
        self.weights = w[keep]
        self.vectors = v[:, keep]
        self.kappa = wga_modes.propagation_constants
        self.profiles = wga_modes.profiles
        self.grid = wga_modes.grid
        self.captured_fraction = float(np.real(np.trace(r)))
        if self.captured_fraction < CAPTURE_WARN_LEVEL:
            warnings.warn(
                f"only {self.captured_fraction:.3f} of the heralded photon couples into guided array modes; "
                "radiated power is dropped", LowCaptureWarning, stacklevel=3)

    def intensity(self, z: float) -> IntensityProfile:
        if not z >= 0:
            raise DomainError(f"propagation distance must be >= 0, got {z}")
        phased = self.vectors * np.exp(1j * self.kappa * z)[:, None]
        fields = self.profiles.T @ phased
        values = np.abs(fields) ** 2 @ self.weights
        return IntensityProfile(self.grid, values, float(z), self.captured_fraction)


def propagate_intensity(heralded: HeraldedState, c: CouplingMatrix, wga_modes: GuidedModeSet,
                        z: float) -> IntensityProfile:
    """Photon-number distribution of heralded photon A after distance ``z`` (um)."""
    return Propagator(heralded, c, wga_modes).intensity(z)


def effective_width(p, grid: SpatialGrid | None = None) -> float:
    """``(int p dx)^2 / int p^2 dx`` for an IntensityProfile or raw samples plus grid."""
    if isinstance(p, IntensityProfile):
        values, grid = p.values, p.grid
    else:
        if grid is None:
            raise DomainError("raw intensity samples need a grid")
        values = np.asarray(p, dtype=float)
    total = grid.integrate(values)
    square = grid.integrate(values * values)
    if not total > 0 or not square > 0:
        raise DomainError("effective width of a zero intensity profile")
    return float(total * total / square)


@dataclass(frozen=True)
class ArrayGeometry:
    """Geometry and indices of the waveguide array (disorder supplied per realization)."""

    n_layers: int = 101
    layer_thickness: float = 0.6
    n_high: float = N_AL30
    n_low: float = N_AL80
    background_index: float | None = None
    grid_step: float = DEFAULT_GRID_STEP
    padding: float = DEFAULT_PADDING
    wavelength: float = WAVELENGTH_UM

    def profile(self, disorder: DisorderSpec | None = None):
        return build_wga(self.n_layers, self.layer_thickness, self.n_high, self.n_low, disorder,
                         self.grid_step, self.padding, self.wavelength, self.background_index)


@dataclass(frozen=True)
class TransportExperiment:
    """Everything a realization needs: the heralded state, photon-A modes, array, disorder.

    ``edge_policy`` is forwarded to the array mode solver; ``"drop"`` discards the rare
    near-cutoff supermodes that disorder pushes out to the window edge.
    ``averaging`` selects ``"ratio"`` (mean of w(z)/w(0) per realization) or
    ``"width"`` (mean w(z) over mean w(0)).
    """

    heralded: HeraldedState
    modes_a: np.ndarray
    schmidt_grid: SpatialGrid
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    delta: float = 0.0
    edge_policy: str = "drop"
    averaging: str = "ratio"

    def __post_init__(self):
        if self.averaging not in ("ratio", "width"):
            raise DomainError(f"averaging must be 'ratio' or 'width', got {self.averaging!r}")
        if not self.delta >= 0:
            raise DomainError(f"disorder delta must be >= 0, got {self.delta}")

    @property
    def array_key(self):
        return (self.geometry, float(self.delta), self.edge_policy)

    def input_modes(self, grid: SpatialGrid) -> np.ndarray:
        """Photon-A Schmidt modes interpolated onto the array grid."""
        return sinc_resample(self.modes_a, self.schmidt_grid, grid.x)

    def widths(self, seed: int, z_samples) -> tuple[np.ndarray, float]:
        """Effective widths at each z for one realization, and its captured fraction."""
        widths, captured = _realization_widths(
            self.geometry, self.delta, self.edge_policy,
            [(self.heralded, None, self)], np.asarray(z_samples, dtype=float), seed)
        return widths[0], captured[0]


def _realization_widths(geometry, delta, edge_policy, inputs, z_samples, seed):
    profile = geometry.profile(DisorderSpec(delta, seed))
    modes = solve_modes_fd(profile, edge_policy=edge_policy)
    if modes.n_modes == 0:
        raise DomainError("array supports no guided modes")
    widths, captured = [], []
    for heralded, sampled, experiment in inputs:
        if sampled is None:
            sampled = experiment.input_modes(profile.grid)
        c = couple(sampled, modes, profile.grid)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LowCaptureWarning)
            prop = Propagator(heralded, c, modes)
        widths.append(np.array([effective_width(prop.intensity(z)) for z in z_samples]))
        captured.append(prop.captured_fraction)
    return widths, captured


def realization_seed(master_seed: int, index: int) -> int:
    """Order-independent 64-bit seed for realization ``index`` (counter-based SeedSequence spawn)."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class EnsembleResult:
    z_samples: np.ndarray
    mean_ratio: np.ndarray
    stderr: np.ndarray
    realization_count: int
    master_seed: int
    ratios: np.ndarray = field(repr=False)
    captured_fraction: float = float("nan")


def _run_task(task):
    try:
        return _realization_widths(*task), None
    except Exception as exc:  # reported per realization, then the run aborts
        return None, f"{type(exc).__name__}: {exc}"


def default_z_samples(z_max: float = DEFAULT_Z_MAX, n: int = DEFAULT_Z_SAMPLES) -> np.ndarray:
    return np.linspace(0.0, z_max, n)


def _reduce(widths: np.ndarray, captured: np.ndarray, experiment: TransportExperiment,
            z_samples: np.ndarray, realizations: int, master_seed: int) -> EnsembleResult:
    ratios = widths / widths[:, :1]
    if experiment.averaging == "ratio":
        samples = ratios
        mean = samples.mean(axis=0)
    else:
        samples = widths / widths[:, 0].mean()
        mean = widths.mean(axis=0) / widths[:, 0].mean()
    if realizations > 1 and experiment.delta > 0:
        stderr = samples.std(axis=0, ddof=1) / math.sqrt(realizations)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleResult(z_samples, mean, stderr, realizations, int(master_seed), ratios,
                          float(captured.mean()))


def ensemble_run_batch(experiments, z_samples=None, realizations: int = 100, master_seed: int = 0,
                       workers: int = 1) -> list[EnsembleResult]:
    """Run several heralded inputs through the same disorder realizations.

    All experiments must share geometry, disorder strength and edge policy; each
    realization's array is then solved once and reused for every input.
    Realization r uses ``realization_seed(master_seed, r)`` and results are gathered
    by index, so the output is identical for any worker count. With zero disorder
    every realization is the same array and it is solved once.
    """
    experiments = list(experiments)
    if not experiments:
        raise DomainError("no experiments to run")
    if realizations < 1:
        raise DomainError(f"need at least one realization, got {realizations}")
    if workers < 1:
        raise DomainError(f"need at least one worker, got {workers}")
    key = experiments[0].array_key
    if any(e.array_key != key for e in experiments):
        raise DomainError("batched experiments must share array geometry, delta and edge policy")
    geometry, delta, edge_policy = key
    z_samples = default_z_samples() if z_samples is None else np.asarray(z_samples, dtype=float)
    if z_samples.size == 0 or np.any(z_samples < 0):
        raise DomainError("z samples must be nonempty and nonnegative")

    grid = geometry.profile().grid
    inputs = [(e.heralded, e.input_modes(grid), None) for e in experiments]
    seeds = [realization_seed(master_seed, r) for r in range(realizations)]
    if delta == 0:
        seeds = seeds[:1]
    tasks = [(geometry, delta, edge_policy, inputs, z_samples, s) for s in seeds]

    if workers == 1 or len(tasks) == 1:
        outcomes = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_task, tasks))

    failures = {r: msg for r, (_, msg) in enumerate(outcomes) if msg is not None}
    if failures:
        raise RealizationError(failures)

    results = []
    for k, experiment in enumerate(experiments):
        widths = np.array([o[0][0][k] for o in outcomes])
        captured = np.array([o[0][1][k] for o in outcomes])
        if widths.shape[0] == 1 and realizations > 1:
            widths = np.repeat(widths, realizations, axis=0)
            captured = np.repeat(captured, realizations)
        if captured.min() < CAPTURE_WARN_LEVEL:
            warnings.warn(
                f"captured fraction down to {captured.min():.3f} across realizations; "
                "radiated power is dropped", LowCaptureWarning, stacklevel=2)
        results.append(_reduce(widths, captured, experiment, z_samples, realizations, master_seed))
    return results


def ensemble_run(experiment: TransportExperiment, z_samples=None, realizations: int = 100,
                 master_seed: int = 0, workers: int = 1) -> EnsembleResult:
    """Average the width ratio ``w_eff(z) / w_eff(0)`` over disorder realizations."""
    return ensemble_run_batch([experiment], z_samples, realizations, master_seed, workers)[0]
