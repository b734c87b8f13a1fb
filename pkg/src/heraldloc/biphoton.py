"""Gaussian two-photon amplitude, its Schmidt decomposition, and single-photon coherence.

The amplitude is ``Psi(x, y) ~ exp(-alpha (x+y)^2 - beta (x-y)^2)``. Photon A is
parametrised by its rms width ``sigma0`` (um) and incoherence ``gamma0`` (the
width-bandwidth product, >= 0.5). Schmidt modes are obtained from an SVD of the
quadrature-weighted sampled kernel, never from closed-form Hermite functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import DomainError, NumericError, TruncationError
from .grid import SpatialGrid, fix_signs

DEFAULT_WINDOW_FACTOR = 8.0
DEFAULT_SCHMIDT_POINTS = 512
DEFAULT_EPSILON_TRUNC = 1e-6
DEFAULT_PAD_FACTOR = 4


def derive_alpha_beta(sigma0: float, gamma0: float) -> tuple[float, float]:
    """Return ``(alpha, beta)`` in um^-2, upper-sign branch so that alpha >= beta."""
    if not sigma0 > 0:
        raise DomainError(f"sigma0 must be positive, got {sigma0}")
    if not gamma0 >= 0.5:
        raise DomainError(f"gamma0 must be >= 0.5 (4*gamma0^2 - 1 >= 0), got {gamma0}")
    radical = gamma0 * math.sqrt(4.0 * gamma0 * gamma0 - 1.0)
    scale = 1.0 / (4.0 * sigma0 * sigma0)
    return scale * (2.0 * gamma0 * gamma0 + radical), scale * (2.0 * gamma0 * gamma0 - radical)


@dataclass(frozen=True)
class GaussianBiphotonSpec:
    """Parameters of the Gaussian two-photon amplitude."""

    sigma0: float
    gamma0: float
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        alpha, beta = derive_alpha_beta(self.sigma0, self.gamma0)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def schmidt_number(self) -> float:
        return 2.0 * self.gamma0

    def default_grid(self, n_points: int = DEFAULT_SCHMIDT_POINTS,
                     window_factor: float = DEFAULT_WINDOW_FACTOR) -> SpatialGrid:
        half = window_factor * self.sigma0 * max(1.0, math.sqrt(self.gamma0))
        return SpatialGrid.centered(half, n_points)

    def amplitude(self, x, y):
        """Unnormalised amplitude evaluated with numpy broadcasting."""
        s = x + y
        d = x - y
        return np.exp(-self.alpha * s * s - self.beta * d * d)


def _mass_outside(spec: GaussianBiphotonSpec, grid: SpatialGrid) -> float:
    # The single-photon marginal |Psi|^2 integrated over the partner is Gaussian with variance sigma0^2.
    s = spec.sigma0 * math.sqrt(2.0)
    lo = (grid.x_min - 0.5 * grid.dx) / s
    hi = (grid.x_max + 0.5 * grid.dx) / s
    return 0.5 * (erfc(-lo) + erfc(hi))


def biphoton_kernel(spec: GaussianBiphotonSpec, grid_x: SpatialGrid,
                    grid_y: SpatialGrid | None = None, mass_tol: float = 1e-6) -> np.ndarray:
    """Sample ``Psi(x_i, y_j)`` normalised so that ``sum |Psi|^2 dx dy = 1``.

    Raises TruncationError when either window loses more than ``mass_tol`` of the
    marginal probability.
    """
    grid_y = grid_x if grid_y is None else grid_y
    for name, g in (("x", grid_x), ("y", grid_y)):
        lost = _mass_outside(spec, g)
        if lost > mass_tol:
            raise TruncationError(
                f"{name}-window [{g.x_min:g}, {g.x_max:g}] um misses {lost:.3g} of the photon "
                f"marginal (sigma0={spec.sigma0:g}); widen it beyond +-6 sigma0")
    psi = spec.amplitude(grid_x.x[:, None], grid_y.x[None, :])
    norm = math.sqrt(np.sum(psi * psi) * grid_x.dx * grid_y.dx)
    return psi / norm


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Retained Schmidt weights (descending) and sampled mode pairs.

    ``modes_a[j]`` and ``modes_b[j]`` are f_j(x) and g_j(y) on ``grid``, orthonormal
    under rectangle quadrature. ``spectrum`` keeps every singular weight of the
    discretised kernel, including the discarded tail.
    """

    eigenvalues: np.ndarray
    modes_a: np.ndarray
    modes_b: np.ndarray
    grid: SpatialGrid
    truncation_residual: float
    spectrum: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        """``sum_j sqrt(lambda_j) f_j(x) g_j(y)`` on the grid."""
        return (self.modes_a.T * np.sqrt(self.eigenvalues)) @ self.modes_b


def schmidt_decompose(spec: GaussianBiphotonSpec, grid: SpatialGrid | None = None,
                      epsilon_trunc: float = DEFAULT_EPSILON_TRUNC) -> SchmidtDecomposition:
    """Schmidt decomposition by SVD of ``Psi(x_i, y_j) dx``.

    Keeps the smallest N with ``sum_{j<=N} lambda_j >= 1 - epsilon_trunc``. Each f_j is
    sign-fixed so its leftmost lobe is positive and g_j takes the same sign flip,
    which leaves the reconstructed amplitude unchanged.
    """
    if not 0.0 < epsilon_trunc <= 0.01:
        raise DomainError(f"epsilon_trunc must lie in (0, 0.01], got {epsilon_trunc}")
    grid = spec.default_grid() if grid is None else grid
    psi = biphoton_kernel(spec, grid)
    try:
        u, s, vh = np.linalg.svd(psi * grid.dx)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"SVD did not converge on grid x_min={grid.x_min:g}, dx={grid.dx:g}, "
            f"n={grid.n_points} (sigma0={spec.sigma0:g}, gamma0={spec.gamma0:g})") from exc
    spectrum = s * s
    cumulative = np.cumsum(spectrum)
    n_keep = int(np.searchsorted(cumulative, 1.0 - epsilon_trunc) + 1)
    n_keep = min(n_keep, spectrum.size)
    weights = spectrum[:n_keep].copy()
    modes_a = u[:, :n_keep].T / math.sqrt(grid.dx)
    modes_b = vh[:n_keep] / math.sqrt(grid.dx)
    signs = fix_signs(modes_a)
    modes_b *= signs[:, None]
    for arr in (weights, modes_a, modes_b, spectrum):
        arr.flags.writeable = False
    return SchmidtDecomposition(weights, modes_a, modes_b, grid,
                                float(1.0 - weights.sum()), spectrum)


def schmidt_number(eigenvalues) -> float:
    """``K = (sum lambda)^2 / sum lambda^2``."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0 or np.any(lam < 0) or not np.any(lam > 0):
        raise DomainError("Schmidt number needs nonnegative weights, not all zero")
    return float(lam.sum() ** 2 / np.sum(lam * lam))


def entanglement_entropy(eigenvalues, tol: float = 1e-8) -> float:
    """Entropy of entanglement ``-sum lambda log2 lambda`` in bits."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0 or np.any(lam < 0):
        raise DomainError("entropy needs a nonempty set of nonnegative weights")
    total = lam.sum()
    if abs(total - 1.0) > tol:
        raise DomainError(f"weights must sum to 1 within {tol:g}, got {total!r}")
    nz = lam[lam > 0]
    return float(-np.sum(nz * np.log2(nz)))


@dataclass(frozen=True)
class CorrelationKernel:
    """First-order correlation ``G(x, x') = sum_{n,m} C[n, m] phi_n(x) conj(phi_m(x'))``.

    Stored in factored form (``coefficients`` C, ``modes`` phi) so that momentum-space
    moments can be taken mode by mode; ``values`` materialises the full matrix.
    """

    grid: SpatialGrid
    coefficients: np.ndarray
    modes: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coefficients))
        modes = np.atleast_2d(np.asarray(self.modes))
        if c.shape != (modes.shape[0], modes.shape[0]):
            raise DomainError(f"coefficient matrix {c.shape} does not match {modes.shape[0]} modes")
        if modes.shape[1] != self.grid.n_points:
            raise DomainError(f"modes sampled on {modes.shape[1]} points, grid has {self.grid.n_points}")
        scale = max(1.0, float(np.abs(c).max()))
        if np.abs(c - c.conj().T).max() > 1e-10 * scale:
            raise DomainError("correlation kernel is not Hermitian")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "modes", modes)
        diag = self.diagonal()
        if diag.min() < -1e-12 * max(1.0, diag.max()):
            raise DomainError("correlation kernel has a negative diagonal")
        if not self.trace() > 0:
            raise DomainError("correlation kernel has zero trace")

    @classmethod
    def from_matrix(cls, grid: SpatialGrid, values: np.ndarray) -> "CorrelationKernel":
        """Factor a sampled Hermitian kernel through its quadrature eigenbasis."""
        values = np.asarray(values)
        w, v = np.linalg.eigh(0.5 * (values + values.conj().T) * grid.dx)
        return cls(grid, np.diag(w), v.T / math.sqrt(grid.dx))

    @property
    def values(self) -> np.ndarray:
        return self.modes.T @ self.coefficients @ self.modes.conj()

    def diagonal(self) -> np.ndarray:
        return np.real(np.einsum("nx,nm,mx->x", self.modes, self.coefficients, self.modes.conj()))

    def trace(self) -> float:
        return float(self.grid.integrate(self.diagonal()))

    def purity(self) -> float:
        """``Tr(rho^2) / Tr(rho)^2`` computed in the mode basis."""
        overlap = self.grid.inner(self.modes, self.modes)
        r = self.coefficients @ overlap.T
        return float(np.real(np.trace(r @ r)) / self.trace() ** 2)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the trace-normalised operator (descending)."""
        overlap = self.grid.inner(self.modes, self.modes).T
        w = np.linalg.eigvals(self.coefficients @ overlap)
        return np.sort(np.real(w))[::-1] / self.trace()


def assemble_g1(eigenvalues, modes_a: np.ndarray, grid: SpatialGrid,
                filter_I: np.ndarray | None = None) -> CorrelationKernel:
    """``G(x, x') = sum_{m,n} sqrt(lambda_m lambda_n) I(m, n) f_n(x) conj(f_m(x'))``, unit trace.

    ``filter_I`` defaults to the identity (no heralding filter).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    modes_a = np.atleast_2d(modes_a)
    if modes_a.shape[0] != lam.size:
        raise DomainError(f"{lam.size} weights but {modes_a.shape[0]} modes")
    if filter_I is None:
        filter_I = np.eye(lam.size)
    filter_I = np.asarray(filter_I)
    if filter_I.shape != (lam.size, lam.size):
        raise DomainError(f"filter matrix {filter_I.shape} does not match {lam.size} modes")
    if np.abs(filter_I - filter_I.conj().T).max() > 1e-10 * max(1.0, float(np.abs(filter_I).max())):
        raise DomainError("filter matrix is not Hermitian")
    root = np.sqrt(lam)
    coeffs = (root[:, None] * filter_I * root[None, :]).T
    diag = np.real(np.einsum("nx,nm,mx->x", modes_a, coeffs, modes_a.conj()))
    trace = grid.integrate(diag)
    if not trace > 0:
        raise DomainError("assembled correlation has zero trace")
    return CorrelationKernel(grid, coeffs / trace, modes_a)


@dataclass(frozen=True)
class CoherenceSummary:
    """rms width ``sigma`` (um), rms wavenumber width ``W`` (um^-1), incoherence ``gamma``."""

    sigma: float
    W: float
    gamma: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma", self.sigma * self.W)


def coherence_summary(kernel: CorrelationKernel, pad_factor: int = DEFAULT_PAD_FACTOR) -> CoherenceSummary:
    """Spatial and wavenumber rms widths of the kernel's diagonal.

    The wavenumber-domain diagonal is built from zero-padded FFTs of the kernel's
    modes, so cost scales with the mode count rather than the full matrix.
    """
    if pad_factor < 4:
        raise DomainError(f"pad_factor must be >= 4, got {pad_factor}")
    grid = kernel.grid
    x = grid.x
    p = kernel.diagonal()
    total = p.sum()
    if not total > 0:
        raise DomainError("kernel has zero trace")
    mean_x = np.sum(x * p) / total
    sigma2 = np.sum((x - mean_x) ** 2 * p) / total

    n_fft = pad_factor * grid.n_points
    spectra = np.fft.fft(kernel.modes, n=n_fft, axis=1)
    q = 2.0 * np.pi * np.fft.fftfreq(n_fft, d=grid.dx)
    pq = np.real(np.einsum("nq,nm,mq->q", spectra, kernel.coefficients, spectra.conj()))
    mean_q = np.sum(q * pq) / pq.sum()
    w2 = np.sum((q - mean_q) ** 2 * pq) / pq.sum()
    return CoherenceSummary(float(math.sqrt(sigma2)), float(math.sqrt(w2)))
