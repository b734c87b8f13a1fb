"""Layered index profiles and their guided TE modes.

Two solvers live here:

* ``solve_modes_fd`` discretises ``u'' + (n^2 k0^2 - kappa^2) u = 0`` with central
  differences on a cell-centred grid (zero field beyond the window) and solves the
  resulting symmetric tridiagonal eigenproblem, optionally Richardson-extrapolating
  the eigenvalues from a second solve at half the step.
* ``solve_slab_modes`` solves the even/odd dispersion relations of the symmetric
  three-layer slab by scanning and bisection and samples the closed-form fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import bisect

from .errors import DomainError, NumericError, ResolutionError, WindowSizeError
from .grid import SpatialGrid, fix_signs

# Rounded 1550 nm indices of Al(0.3)Ga(0.7)As and Al(0.8)Ga(0.2)As from the
# Gehrsitz et al. (2000) AlGaAs dispersion model; configuration defaults only.
N_AL30 = 3.23
N_AL80 = 2.99
WAVELENGTH_UM = 1.55

DEFAULT_GRID_STEP = 0.05
DEFAULT_PADDING = 20.0
EDGE_TOL = 1e-6


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers ``(thickness_um, index)`` surrounded by ``background_index``.

    The stack is centred on x = 0.
    """

    layers: tuple
    wavelength: float = WAVELENGTH_UM
    background_index: float = N_AL80

    def __post_init__(self):
        layers = tuple((float(t), float(n)) for t, n in self.layers)
        if not layers:
            raise DomainError("a layer stack needs at least one layer")
        if any(t <= 0 for t, _ in layers):
            raise DomainError("layer thicknesses must be positive")
        if any(n <= 1 for _, n in layers) or self.background_index <= 1:
            raise DomainError("refractive indices must exceed 1")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        object.__setattr__(self, "layers", layers)

    @property
    def total_thickness(self) -> float:
        return sum(t for t, _ in self.layers)

    def sample(self, grid_step: float = DEFAULT_GRID_STEP, padding: float = DEFAULT_PADDING) -> "IndexProfile":
        """Cell-centred sampling; each cell carries the cell average of n^2.

        When layer interfaces fall on cell edges (thickness and padding multiples of
        the step) this is exactly the piecewise-constant profile.
        """
        if not grid_step > 0 or padding < 0:
            raise DomainError("grid_step must be positive and padding nonnegative")
        length = self.total_thickness + 2.0 * padding
        n_points = int(math.ceil(round(length / grid_step, 6)))  # exact multiples must not gain a cell
        grid = SpatialGrid(-0.5 * n_points * grid_step + 0.5 * grid_step, grid_step, n_points)
        edges = grid.x_min - 0.5 * grid_step + grid_step * np.arange(n_points + 1)

        bounds = -0.5 * self.total_thickness + np.concatenate(
            ([0.0], np.cumsum([t for t, _ in self.layers])))
        n2 = np.array([n * n for _, n in self.layers])
        bg2 = self.background_index ** 2
        # Antiderivative of n^2 relative to the background, piecewise linear in x.
        cum = np.concatenate(([0.0], np.cumsum((n2 - bg2) * np.diff(bounds))))
        excess = np.interp(edges, bounds, cum)
        cell_n2 = bg2 + np.diff(excess) / grid_step
        n_values = np.sqrt(cell_n2)
        n_values.flags.writeable = False
        return IndexProfile(grid, n_values, self.wavelength, self.background_index)


@dataclass(frozen=True)
class DisorderSpec:
    """Per-layer Gaussian index perturbation with standard deviation ``delta``."""

    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise DomainError(f"disorder delta must be >= 0, got {self.delta}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("disorder seed must be a 64-bit unsigned integer")

    def draw(self, n_layers: int) -> np.ndarray:
        if self.delta == 0:
            return np.zeros(n_layers)
        return np.random.default_rng(int(self.seed)).normal(0.0, self.delta, n_layers)


@dataclass(frozen=True)
class IndexProfile:
    grid: SpatialGrid
    n_values: np.ndarray
    wavelength: float
    cladding_index: float

    def __post_init__(self):
        n = np.asarray(self.n_values, dtype=float)
        if n.shape != (self.grid.n_points,):
            raise DomainError("index samples do not match the grid")
        if np.any(n <= 1):
            raise DomainError("refractive index must exceed 1 everywhere")
        object.__setattr__(self, "n_values", n)

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.wavelength

    def refined(self) -> "IndexProfile":
        """Same piecewise profile on the half-step cell-centred grid."""
        return IndexProfile(self.grid.refined(), np.repeat(self.n_values, 2),
                            self.wavelength, self.cladding_index)

    def save(self, path) -> None:
        np.savez(path, grid=np.array([self.grid.x_min, self.grid.dx, self.grid.n_points]),
                 n_values=self.n_values, wavelength=self.wavelength, cladding_index=self.cladding_index)

    @classmethod
    def load(cls, path) -> "IndexProfile":
        with np.load(path) as data:
            g = data["grid"]
            return cls(SpatialGrid(g[0], g[1], int(g[2])), data["n_values"],
                       float(data["wavelength"]), float(data["cladding_index"]))


@dataclass(frozen=True)
class GuidedModeSet:
    """Guided modes ordered fundamental first, orthonormal under grid quadrature."""

    grid: SpatialGrid
    propagation_constants: np.ndarray
    profiles: np.ndarray
    k0: float
    cladding_index: float
    dropped: int = field(default=0, compare=False)

    @property
    def n_modes(self) -> int:
        return int(self.propagation_constants.size)

    @property
    def effective_indices(self) -> np.ndarray:
        return self.propagation_constants / self.k0

    def save(self, path) -> None:
        np.savez(path, grid=np.array([self.grid.x_min, self.grid.dx, self.grid.n_points]),
                 propagation_constants=self.propagation_constants, profiles=self.profiles,
                 k0=self.k0, cladding_index=self.cladding_index, dropped=self.dropped)

    @classmethod
    def load(cls, path) -> "GuidedModeSet":
        with np.load(path) as data:
            g = data["grid"]
            return cls(SpatialGrid(g[0], g[1], int(g[2])), data["propagation_constants"],
                       data["profiles"], float(data["k0"]), float(data["cladding_index"]),
                       int(data["dropped"]))


def build_wga(n_layers: int = 101, layer_thickness: float = 0.6, n_high: float = N_AL30,
              n_low: float = N_AL80, disorder: DisorderSpec | None = None,
              grid_step: float = DEFAULT_GRID_STEP, padding: float = DEFAULT_PADDING,
              wavelength: float = WAVELENGTH_UM, background_index: float | None = None) -> IndexProfile:
    """Alternating high/low waveguide array, high-index layers at both ends and the centre.

    Every layer index is shifted by an independent Gaussian draw (constant across
    the layer) from a generator seeded by ``disorder.seed``.
    """
    if n_layers < 1 or n_layers % 2 == 0:
        raise DomainError(f"n_layers must be odd so the centre layer is defined, got {n_layers}")
    if grid_step > layer_thickness / 8:
        raise ResolutionError(
            f"grid_step {grid_step:g} um exceeds layer_thickness/8 = {layer_thickness / 8:g} um")
    disorder = DisorderSpec() if disorder is None else disorder
    shifts = disorder.draw(n_layers)
    base = np.where(np.arange(n_layers) % 2 == 0, n_high, n_low)
    stack = LayerStack(tuple(zip(np.full(n_layers, layer_thickness), base + shifts)),
                       wavelength, n_low if background_index is None else background_index)
    return stack.sample(grid_step, padding)


def _tridiagonal_modes(profile: IndexProfile, lower: float, upper: float):
    h = profile.grid.dx
    k0 = profile.k0
    diag = -2.0 / h ** 2 + (profile.n_values * k0) ** 2
    off = np.full(profile.grid.n_points - 1, 1.0 / h ** 2)
    try:
        w, v = eigh_tridiagonal(diag, off, select="v", select_range=(lower, upper))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"tridiagonal eigensolver failed on {profile.grid.n_points} points") from exc
    return w[::-1], v[:, ::-1]


def solve_modes_fd(profile: IndexProfile, richardson: bool = True, edge_tol: float = EDGE_TOL,
                   edge_policy: str = "raise") -> GuidedModeSet:
    """Guided modes of a 1D index profile by finite differences.

    Modes are kept when ``cladding_index < kappa / k0 < max(n)``. With ``richardson``
    the squared propagation constants are extrapolated as ``(4 k_{h/2} - k_h) / 3``;
    profiles always come from the solve on the profile's own grid.

    ``edge_policy`` decides what happens to a retained mode whose amplitude at the
    window edge exceeds ``edge_tol`` of its peak: ``"raise"`` (WindowSizeError) or
    ``"drop"`` (mode discarded, count reported in ``GuidedModeSet.dropped``).
    """
    if edge_policy not in ("raise", "drop"):
        raise DomainError(f"edge_policy must be 'raise' or 'drop', got {edge_policy!r}")
    k0 = profile.k0
    lower = (k0 * profile.cladding_index) ** 2
    upper = (k0 * profile.n_values.max()) ** 2
    grid = profile.grid
    if not upper > lower:
        return GuidedModeSet(grid, np.zeros(0), np.zeros((0, grid.n_points)), k0, profile.cladding_index)

    kappa2, vecs = _tridiagonal_modes(profile, lower, upper)
    if richardson and kappa2.size:
        fine, _ = _tridiagonal_modes(profile.refined(), lower, upper)
        m = min(fine.size, kappa2.size)
        kappa2 = kappa2.copy()
        kappa2[:m] = (4.0 * fine[:m] - kappa2[:m]) / 3.0

    kappa = np.sqrt(np.maximum(kappa2, 0.0))
    neff = kappa / k0
    keep = (neff > profile.cladding_index) & (neff < profile.n_values.max())
    profiles = (vecs[:, keep] / math.sqrt(grid.dx)).T.copy()
    kappa = kappa[keep]

    peak = np.abs(profiles).max(axis=1) if profiles.size else np.zeros(0)
    edge = np.maximum(np.abs(profiles[:, 0]), np.abs(profiles[:, -1])) if profiles.size else np.zeros(0)
    leaky = edge > edge_tol * peak
    if np.any(leaky):
        if edge_policy == "raise":
            worst = float(np.max(edge[leaky] / peak[leaky]))
            raise WindowSizeError(
                f"{int(leaky.sum())} guided mode(s) reach the window edge (worst edge/peak "
                f"{worst:.2e} > {edge_tol:g}); increase the padding")
        profiles = profiles[~leaky]
        kappa = kappa[~leaky]

    fix_signs(profiles)
    profiles.flags.writeable = False
    kappa.flags.writeable = False
    return GuidedModeSet(grid, kappa, profiles, k0, profile.cladding_index, int(np.count_nonzero(leaky)))


# --- symmetric three-layer slab -------------------------------------------------


@dataclass(frozen=True)
class SlabSpec:
    core_width: float
    n_core: float = N_AL30
    n_clad: float = N_AL80
    wavelength: float = WAVELENGTH_UM

    def __post_init__(self):
        if not self.core_width > 0:
            raise DomainError(f"core_width must be positive, got {self.core_width}")
        if not self.n_core > self.n_clad > 1:
            raise DomainError(f"need n_core > n_clad > 1, got {self.n_core}, {self.n_clad}")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def numerical_aperture(self) -> float:
        return math.sqrt(self.n_core ** 2 - self.n_clad ** 2)

    @property
    def v_number(self) -> float:
        """Half-width normalised frequency ``k0 (d/2) NA``."""
        return self.k0 * 0.5 * self.core_width * self.numerical_aperture

    def with_width(self, core_width: float) -> "SlabSpec":
        return SlabSpec(core_width, self.n_core, self.n_clad, self.wavelength)

    def as_stack(self) -> LayerStack:
        return LayerStack(((self.core_width, self.n_core),), self.wavelength, self.n_clad)


@dataclass(frozen=True)
class SlabMode:
    """Closed-form TE mode of the symmetric slab (core centred on 0, unnormalised).

    ``kt`` is the transverse wavenumber in the core, ``decay`` the cladding decay rate.
    """

    parity: str
    kt: float
    decay: float
    beta: float
    half_width: float

    def field(self, y):
        y = np.asarray(y, dtype=float)
        a = self.half_width
        tail = np.exp(-self.decay * (np.abs(y) - a))
        if self.parity == "even":
            return np.where(np.abs(y) <= a, np.cos(self.kt * y), math.cos(self.kt * a) * tail)
        return np.where(np.abs(y) <= a, np.sin(self.kt * y), np.sign(y) * math.sin(self.kt * a) * tail)

    def derivative(self, y, side: str = "auto"):
        """dE/dy; ``side`` = "core" or "clad" evaluates that branch's formula regardless of y."""
        y = np.asarray(y, dtype=float)
        a = self.half_width
        if self.parity == "even":
            core = -self.kt * np.sin(self.kt * y)
            clad = -self.decay * np.sign(y) * math.cos(self.kt * a) * np.exp(-self.decay * (np.abs(y) - a))
        else:
            core = self.kt * np.cos(self.kt * y)
            clad = -self.decay * math.sin(self.kt * a) * np.exp(-self.decay * (np.abs(y) - a))
        if side == "core":
            return core
        if side == "clad":
            return clad
        return np.where(np.abs(y) <= a, core, clad)

    def value_on(self, y, side: str):
        y = np.asarray(y, dtype=float)
        a = self.half_width
        if side == "core":
            return np.cos(self.kt * y) if self.parity == "even" else np.sin(self.kt * y)
        tail = np.exp(-self.decay * (np.abs(y) - a))
        if self.parity == "even":
            return math.cos(self.kt * a) * tail
        return np.sign(y) * math.sin(self.kt * a) * tail


def slab_mode_count(slab: SlabSpec) -> int:
    """Number of guided TE modes: ``floor(2 d NA / wavelength) + 1``."""
    return int(math.floor(2.0 * slab.core_width * slab.numerical_aperture / slab.wavelength)) + 1


def _dispersion(parity: str, v: float):
    if parity == "even":
        return lambda u: u * math.sin(u) - math.sqrt(max(v * v - u * u, 0.0)) * math.cos(u)
    return lambda u: u * math.cos(u) + math.sqrt(max(v * v - u * u, 0.0)) * math.sin(u)


def slab_mode_branches(slab: SlabSpec) -> list[SlabMode]:
    """All guided modes of the slab, fundamental first.

    Each dispersion branch is bracketed by scanning the transverse wavenumber in
    steps of pi/(64 d) and refined by bisection to 1e-12 relative.
    """
    a = 0.5 * slab.core_width
    v = slab.v_number
    k0 = slab.k0
    step = math.pi / 128.0  # pi / (64 d) in kt, times a
    scan = np.append(np.arange(1, int(math.ceil(v / step))) * step, v)
    scan = scan[scan <= v]
    modes = []
    for parity in ("even", "odd"):
        f = _dispersion(parity, v)
        vals = np.array([f(u) for u in scan])
        for i in range(scan.size - 1):
            lo, hi = scan[i], scan[i + 1]
            if vals[i] == 0.0:
                root = lo
            elif vals[i] * vals[i + 1] < 0:
                try:
                    root = bisect(f, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=400)
                except RuntimeError as exc:
                    raise NumericError(f"bisection failed in [{lo}, {hi}]") from exc
            else:
                continue
            w = math.sqrt(max(v * v - root * root, 0.0))
            if w <= 0.0:
                continue  # at cutoff: not guided
            kt = root / a
            beta = math.sqrt((k0 * slab.n_core) ** 2 - kt * kt)
            modes.append(SlabMode(parity, kt, w / a, beta, a))
    modes.sort(key=lambda m: -m.beta)
    return modes


def slab_required_half_width(slab: SlabSpec, decay_lengths: float = 30.0) -> float:
    """Half-window over which every guided mode decays by ``exp(-decay_lengths)``."""
    modes = slab_mode_branches(slab)
    slowest = min(m.decay for m in modes)
    return 0.5 * slab.core_width + decay_lengths / slowest


def solve_slab_modes(slab: SlabSpec, grid: SpatialGrid, edge_tol: float = EDGE_TOL,
                     branches: list[SlabMode] | None = None) -> GuidedModeSet:
    """Closed-form slab modes sampled on ``grid``, orthonormal under grid quadrature.

    ``branches`` may carry a previous ``slab_mode_branches(slab)`` result to skip the root search.
    """
    branches = slab_mode_branches(slab) if branches is None else branches
    y = grid.x
    profiles = np.array([m.field(y) for m in branches])
    peak = np.abs(profiles).max(axis=1)
    edge = np.maximum(np.abs(profiles[:, 0]), np.abs(profiles[:, -1]))
    if np.any(edge > edge_tol * peak):
        raise WindowSizeError(
            f"slab modes not contained in [{grid.x_min:g}, {grid.x_max:g}] um; need half-width "
            f">= {slab_required_half_width(slab, -math.log(edge_tol)):g} um")
    profiles /= np.sqrt(grid.integrate(profiles * profiles))[:, None]
    # Sampled closed forms are orthogonal only to O(dx^2) under the rectangle rule
    # (the field's second derivative jumps at the interfaces); the symmetric
    # (Loewdin) correction is the smallest change that makes them exactly orthonormal.
    w, v = np.linalg.eigh(grid.inner(profiles, profiles))
    profiles = (v @ np.diag(w ** -0.5) @ v.T) @ profiles
    fix_signs(profiles)
    kappa = np.array([m.beta for m in branches])
    profiles.flags.writeable = False
    return GuidedModeSet(grid, kappa, profiles, slab.k0, slab.n_clad)


def select_tsw_family(target_mode_counts, template: SlabSpec) -> list[SlabSpec]:
    """Core widths at the middle of each target's mode-count interval.

    Width interval giving exactly m modes is ``[(m-1), m) * wavelength / (2 NA)``.
    """
    unit = template.wavelength / (2.0 * template.numerical_aperture)
    family = []
    for m in target_mode_counts:
        if int(m) != m or m < 1:
            raise DomainError(f"unreachable guided-mode count {m!r}")
        family.append(template.with_width((int(m) - 0.5) * unit))
    return family
