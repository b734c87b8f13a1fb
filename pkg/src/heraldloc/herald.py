"""Heralding photon A by projecting photon B onto the guided modes of a slab waveguide.

Photon B's Schmidt modes are imaged onto the slab with magnification Z, coupled
to its guided modes, and the resulting filter matrix ``I = d d^H`` conditions
photon A's reduced state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import minimize_scalar

from .biphoton import (CoherenceSummary, CorrelationKernel, GaussianBiphotonSpec, SchmidtDecomposition,
                       assemble_g1, coherence_summary, schmidt_decompose)
from .errors import DegenerateHeraldError, DomainError, TruncationError
from .grid import SpatialGrid, sinc_resample
from .modesolver import GuidedModeSet, SlabSpec, slab_mode_branches, solve_slab_modes

DEFAULT_Z_RANGE = (0.25, 4.0)
DEFAULT_Z_SAMPLES = 64
Z_REFINE_TOL = 1e-3

ZPolicy = Union[str, float]


@dataclass(frozen=True)
class CouplingMatrix:
    """``entries[n, i] = <source_n, guided_i>``; rows are source modes."""

    entries: np.ndarray

    @property
    def row_capture(self) -> np.ndarray:
        return np.sum(np.abs(self.entries) ** 2, axis=1)

    @property
    def shape(self):
        return self.entries.shape


def couple(source_modes: np.ndarray, guided_modes, grid: SpatialGrid) -> CouplingMatrix:
    """Overlap integrals of source modes with conjugated guided modes on a common grid."""
    if isinstance(guided_modes, GuidedModeSet):
        if not guided_modes.grid.same_as(grid):
            raise DomainError("guided modes are sampled on a different grid")
        guided = guided_modes.profiles
    else:
        guided = np.atleast_2d(guided_modes)
    source = np.atleast_2d(source_modes)
    if source.shape[1] != grid.n_points or guided.shape[1] != grid.n_points:
        raise DomainError(
            f"mode sets sampled on {source.shape[1]} and {guided.shape[1]} points, grid has {grid.n_points}")
    return CouplingMatrix(grid.inner(source, guided))


def magnify(modes: np.ndarray, grid: SpatialGrid, Z: float, target: SpatialGrid | None = None,
            pad: int = 0, mass_tol: float = 1e-8) -> tuple[np.ndarray, SpatialGrid]:
    """Image sampled modes with magnification Z: ``g(y) -> g(y / Z) / sqrt(Z)``.

    Without ``target`` the result lives on the scaled grid ``Z * x`` (extended by
    ``pad`` zero nodes per side), where it is exact. With an explicit ``target`` the
    modes are band-limited interpolated; TruncationError is raised if more than
    ``mass_tol`` of any mode's norm would land outside the target window.
    """
    if not Z > 0:
        raise DomainError(f"magnification must be positive, got {Z}")
    modes = np.atleast_2d(modes)
    if target is None:
        out = np.zeros((modes.shape[0], grid.n_points + 2 * pad), dtype=modes.dtype)
        out[:, pad:pad + grid.n_points] = modes / math.sqrt(Z)
        return out, grid.scaled(Z, pad)

    x = grid.x
    lo = (target.x_min - 0.5 * target.dx) / Z
    hi = (target.x_max + 0.5 * target.dx) / Z
    outside = (x < lo) | (x > hi)
    lost = grid.integrate(np.abs(modes[:, outside]) ** 2) if np.any(outside) else np.zeros(modes.shape[0])
    norms = grid.integrate(np.abs(modes) ** 2)
    if np.any(lost > mass_tol * norms):
        raise TruncationError(
            f"magnified modes leave the target window [{target.x_min:g}, {target.x_max:g}] um "
            f"(lost fraction up to {float(np.max(lost / norms)):.2e} at Z={Z:g})")
    return sinc_resample(modes, grid, target.x / Z) / math.sqrt(Z), target


def overlap_factor(d: CouplingMatrix) -> float:
    """``F = prod_j |d_jj|`` over the leading min(rows, columns) diagonal."""
    n = min(d.shape)
    return float(np.prod(np.abs(np.diagonal(d.entries)[:n])))


class SlabModeFamily:
    """Guided modes of one slab, sampled on demand on any grid (roots found once)."""

    def __init__(self, slab: SlabSpec, decay_lengths: float = 30.0):
        self.slab = slab
        self.branches = slab_mode_branches(slab)
        slowest = min(m.decay for m in self.branches)
        self.half_width = 0.5 * slab.core_width + decay_lengths / slowest

    def modes_on(self, grid: SpatialGrid) -> GuidedModeSet:
        return solve_slab_modes(self.slab, grid, branches=self.branches)


class _Coupler:
    """Couplings of fixed Schmidt modes to a guided-mode family at any magnification.

    ``family`` needs ``half_width`` (extent the guided modes need, um) and
    ``modes_on(grid) -> GuidedModeSet``; a SlabSpec is wrapped automatically.
    """

    def __init__(self, modes_b: np.ndarray, grid: SpatialGrid, family):
        if np.atleast_2d(modes_b).shape[0] == 0:
            raise DomainError("no Schmidt modes to couple")
        self.modes_b = np.atleast_2d(modes_b)
        self.grid = grid
        self.family = SlabModeFamily(family) if isinstance(family, SlabSpec) else family

    def coupling(self, Z: float) -> tuple[CouplingMatrix, GuidedModeSet]:
        reach = Z * max(abs(self.grid.x_min), abs(self.grid.x_max))
        pad = max(0, int(math.ceil((self.family.half_width - reach) / (Z * self.grid.dx))))
        imaged, target = magnify(self.modes_b, self.grid, Z, pad=pad)
        guided = self.family.modes_on(target)
        if guided.n_modes == 0:
            raise DomainError("guided-mode family is empty")
        return couple(imaged, guided, target), guided

    def overlap(self, Z: float) -> float:
        return overlap_factor(self.coupling(Z)[0])


@dataclass(frozen=True)
class MagnificationScan:
    z_values: np.ndarray
    f_values: np.ndarray
    z_optimum: float

    @property
    def f_optimum(self) -> float:
        return float(self.f_values.max())


def optimize_magnification(schmidt_modes_b: np.ndarray, grid: SpatialGrid, tsw,
                           z_grid=None, refine: bool = True) -> MagnificationScan:
    """Scan F(Z) over ``z_grid`` and refine the best sample by bounded Brent search.

    ``tsw`` is a SlabSpec or any mode family with ``half_width`` and ``modes_on(grid)``.
    The default scan is 64 log-spaced samples on [0.25, 4]. The refined point is
    merged into the scan; ties resolve to the smallest Z.
    """
    if z_grid is None:
        z_grid = np.geomspace(*DEFAULT_Z_RANGE, DEFAULT_Z_SAMPLES)
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size < 32 or np.any(np.diff(z_grid) <= 0):
        raise DomainError("z_grid needs >= 32 strictly increasing samples")
    if z_grid[0] > DEFAULT_Z_RANGE[0] or z_grid[-1] < DEFAULT_Z_RANGE[1]:
        raise DomainError("z_grid must span at least [0.25, 4]")
    coupler = _Coupler(schmidt_modes_b, grid, tsw)
    f_values = np.array([coupler.overlap(z) for z in z_grid])
    best = int(np.argmax(f_values))

    if refine:
        lo = z_grid[max(best - 1, 0)]
        hi = z_grid[min(best + 1, z_grid.size - 1)]
        res = minimize_scalar(lambda z: -coupler.overlap(z), bounds=(lo, hi), method="bounded",
                              options={"xatol": Z_REFINE_TOL})
        if res.success and -res.fun > f_values[best]:
            pos = int(np.searchsorted(z_grid, res.x))
            z_grid = np.insert(z_grid, pos, res.x)
            f_values = np.insert(f_values, pos, -res.fun)
            best = int(np.argmax(f_values))
    return MagnificationScan(z_grid, f_values, float(z_grid[best]))


@dataclass(frozen=True)
class HeraldedState:
    """Photon A conditioned on photon B being detected in the first M guided modes.

    ``filter_matrix[m, n] = sum_{j<M} d[m, j] conj(d[n, j])``; ``normalization`` is the
    detection probability ``sum_n lambda_n I(n, n)`` of the unnormalised state.
    """

    schmidt_weights: np.ndarray
    filter_matrix: np.ndarray
    normalization: float
    mode_count_kept: int

    def density_coefficients(self) -> np.ndarray:
        """Unit-trace density matrix ``rho[n, m]`` in the photon-A Schmidt basis."""
        root = np.sqrt(self.schmidt_weights)
        return (root[:, None] * self.filter_matrix * root[None, :]).T / self.normalization

    def correlation(self, modes_a: np.ndarray, grid: SpatialGrid) -> CorrelationKernel:
        return assemble_g1(self.schmidt_weights, modes_a, grid, self.filter_matrix)

    def purity(self) -> float:
        rho = self.density_coefficients()
        return float(np.real(np.trace(rho @ rho)))


def herald_filter(schmidt: SchmidtDecomposition, d: CouplingMatrix, M: int | None = None) -> HeraldedState:
    """Filter matrix and detection probability for projection onto the first M guided modes."""
    entries = d.entries
    if entries.shape[0] != schmidt.n_modes:
        raise DomainError(f"coupling has {entries.shape[0]} rows for {schmidt.n_modes} Schmidt modes")
    M = entries.shape[1] if M is None else int(M)
    if not 1 <= M <= entries.shape[1]:
        raise DomainError(f"M={M} outside 1..{entries.shape[1]} guided modes")
    kept = entries[:, :M]
    filt = kept @ kept.conj().T
    filt = 0.5 * (filt + filt.conj().T)
    norm = float(np.real(np.sum(schmidt.eigenvalues * np.diagonal(filt))))
    if norm < 1e-12:
        raise DegenerateHeraldError(f"heralding probability {norm:.3e} is numerically zero")
    return HeraldedState(schmidt.eigenvalues, filt, norm, M)


@dataclass(frozen=True)
class HeraldingResult:
    """Every intermediate of the heralding pipeline for one biphoton and slab."""

    schmidt: SchmidtDecomposition
    tsw: SlabSpec
    z: float
    scan: MagnificationScan | None
    coupling: CouplingMatrix
    state: HeraldedState
    kernel: CorrelationKernel
    summary: CoherenceSummary


def herald(spec: GaussianBiphotonSpec, tsw: SlabSpec, z_policy: ZPolicy = "optimize",
           schmidt: SchmidtDecomposition | None = None, M: int | None = None,
           z_grid=None) -> HeraldingResult:
    """Schmidt decomposition -> slab modes -> magnification -> coupling -> filter -> G1 -> sigma, gamma."""
    schmidt = schmidt_decompose(spec) if schmidt is None else schmidt
    scan = None
    if isinstance(z_policy, str):
        if z_policy != "optimize":
            raise DomainError(f"z_policy must be 'optimize' or a positive number, got {z_policy!r}")
        scan = optimize_magnification(schmidt.modes_b, schmidt.grid, tsw, z_grid)
        z = scan.z_optimum
    else:
        z = float(z_policy)
        if not z > 0:
            raise DomainError(f"fixed magnification must be positive, got {z}")
    d, _ = _Coupler(schmidt.modes_b, schmidt.grid, tsw).coupling(z)
    state = herald_filter(schmidt, d, M)
    kernel = state.correlation(schmidt.modes_a, schmidt.grid)
    return HeraldingResult(schmidt, tsw, z, scan, d, state, kernel, coherence_summary(kernel))


def heralded_coherence(spec: GaussianBiphotonSpec, tsw: SlabSpec, z_policy: ZPolicy = "optimize",
                       schmidt: SchmidtDecomposition | None = None) -> CoherenceSummary:
    return herald(spec, tsw, z_policy, schmidt).summary
