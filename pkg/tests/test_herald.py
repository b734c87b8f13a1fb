import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_hermite

from heraldloc.biphoton import GaussianBiphotonSpec, coherence_summary, schmidt_decompose
from heraldloc.errors import DegenerateHeraldError, DomainError, TruncationError
from heraldloc.grid import SpatialGrid, sinc_resample
from heraldloc.herald import (CouplingMatrix, couple, herald, herald_filter, magnify, optimize_magnification,
                              overlap_factor)
from heraldloc.modesolver import GuidedModeSet, SlabSpec

from conftest import TSW_COUNTS


def gaussian(grid, width, centre=0.0):
    """Unit-norm amplitude whose intensity has rms width ``width``."""
    f = np.exp(-(grid.x - centre) ** 2 / (4 * width * width))
    return f / math.sqrt(grid.integrate(f * f))


class HermiteFamily:
    """Stand-in guided-mode family: first ``n`` Hermite functions of width ``b``."""

    def __init__(self, b, n):
        self.b, self.n = b, n
        self.half_width = b * (math.sqrt(2 * n + 1) + 10)

    def modes_on(self, grid):
        u = grid.x / self.b
        rows = np.array([eval_hermite(j, u) * np.exp(-u * u / 2) for j in range(self.n)])
        rows /= np.sqrt(grid.integrate(rows * rows))[:, None]
        return GuidedModeSet(grid, -np.arange(self.n, dtype=float), rows, 1.0, 0.0)


class GaussianFamily:
    def __init__(self, width):
        self.width = width
        self.half_width = 12 * width

    def modes_on(self, grid):
        return GuidedModeSet(grid, np.zeros(1), gaussian(grid, self.width)[None, :], 1.0, 0.0)


# --- coupling and magnification ---------------------------------------------


def test_couple_self_is_identity(decomp):
    sd = decomp(1.5)
    d = couple(sd.modes_a, sd.modes_a, sd.grid)
    assert np.max(np.abs(d.entries - np.eye(sd.n_modes))) < 1e-10
    assert np.allclose(d.row_capture, 1.0)


def test_couple_grid_mismatch(decomp):
    sd = decomp(1.5)
    other = GuidedModeSet(sd.grid.scaled(2.0), np.zeros(1), sd.modes_a[:1].copy(), 1.0, 0.0)
    with pytest.raises(DomainError):
        couple(sd.modes_a, other, sd.grid)
    with pytest.raises(DomainError):
        couple(sd.modes_a, np.ones((1, 7)), sd.grid)


def test_coupling_into_array_golden(decomp, wga):
    # frozen regression anchor for the gamma0 = 0.5 photon launched on the array centre
    sd = decomp(0.5)
    profile, modes = wga
    d = couple(sinc_resample(sd.modes_a, sd.grid, profile.grid.x), modes, profile.grid)
    assert d.row_capture[0] == pytest.approx(0.8778412, abs=1e-6)
    assert np.all(d.row_capture <= 1 + 1e-8)
    # symmetric input excites only even supermodes
    assert np.max(np.abs(d.entries[0, 1::2])) < 1e-9


def test_magnify_unit_is_identity(decomp):
    sd = decomp(1.5)
    out, grid = magnify(sd.modes_b, sd.grid, 1.0)
    assert grid.same_as(sd.grid)
    assert np.array_equal(out, sd.modes_b)


@pytest.mark.parametrize("Z", [0.5, 2.0])
def test_magnify_preserves_norm(decomp, Z):
    sd = decomp(1.5)
    out, grid = magnify(sd.modes_b, sd.grid, Z, pad=10)
    assert grid.dx == pytest.approx(Z * sd.grid.dx)
    norms = grid.integrate(out ** 2)
    assert np.allclose(norms, 1.0, atol=1e-12)
    target = SpatialGrid.centered(12 * Z, 801)
    resampled, _ = magnify(sd.modes_b[:5], sd.grid, Z, target=target)
    assert np.allclose(target.integrate(resampled ** 2), 1.0, atol=1e-8)


@pytest.mark.parametrize("a, b", [(1.0, 1.0), (1.0, 0.4), (0.7, 2.3)])
def test_magnified_gaussian_overlap_closed_form(a, b):
    # <G_a Z, G_b> for Gaussians of rms widths Z a and b: sqrt(2 Z a b / ((Z a)^2 + b^2))
    src = SpatialGrid.centered(12.0 * a, 601)
    target = SpatialGrid.centered(15.0 * max(a, b) * 1.5, 1201)
    for Z in (0.6, 1.0, 1.4):
        imaged, _ = magnify(gaussian(src, a), src, Z, target=target)
        got = target.inner(imaged, gaussian(target, b))[0, 0]
        za = Z * a
        assert got == pytest.approx(math.sqrt(2 * za * b / (za * za + b * b)), abs=1e-6)


def test_magnify_target_truncation(decomp):
    sd = decomp(1.5)
    with pytest.raises(TruncationError):
        magnify(sd.modes_b, sd.grid, 2.0, target=SpatialGrid.centered(3.0, 200))
    with pytest.raises(DomainError):
        magnify(sd.modes_b, sd.grid, 0.0)


# --- overlap factor and Z optimisation ---------------------------------------


def test_overlap_factor_uses_leading_diagonal():
    d = CouplingMatrix(np.array([[0.9, 0.1, 0.0], [0.2, -0.8, 0.1]]))
    assert overlap_factor(d) == pytest.approx(0.72)
    assert overlap_factor(CouplingMatrix(d.entries.T)) == pytest.approx(0.72)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_overlap_factor_sign_flip_invariant(seed):
    rng = np.random.default_rng(seed)
    grid = SpatialGrid.centered(10.0, 256)
    a = rng.normal(size=(4, 256)) * np.exp(-grid.x ** 2 / 8)
    b = rng.normal(size=(6, 256)) * np.exp(-grid.x ** 2 / 8)
    base = overlap_factor(couple(a, b, grid))
    sa = rng.choice([-1.0, 1.0], size=4)[:, None]
    sb = rng.choice([-1.0, 1.0], size=6)[:, None]
    assert overlap_factor(couple(sa * a, sb * b, grid)) == pytest.approx(base, rel=1e-12)


@pytest.mark.parametrize("b", [0.6, 1.7, 3.1])
def test_single_mode_width_matching_optimum(b):
    # gamma0 = 0.5: one Gaussian Schmidt mode of rms width sigma0; matching a Gaussian
    # guided mode of rms width b gives Z* = b / sigma0 and F = 1
    sd = schmidt_decompose(GaussianBiphotonSpec(1.0, 0.5))
    z_grid = np.geomspace(0.25, 4.0, 64)
    scan = optimize_magnification(sd.modes_b, sd.grid, GaussianFamily(b), z_grid)
    step = z_grid[np.searchsorted(z_grid, b)] - z_grid[np.searchsorted(z_grid, b) - 1]
    assert abs(scan.z_optimum - b) <= step
    assert abs(scan.z_optimum - b) < 5e-3
    assert scan.f_optimum == pytest.approx(1.0, abs=1e-5)


def test_hermite_family_width_matching_optimum():
    # Schmidt modes are Hermite functions of width sigma0 / sqrt(gamma0): Z* = b sqrt(gamma0) / sigma0
    gamma0, b = 3.0, 0.9
    sd = schmidt_decompose(GaussianBiphotonSpec(1.0, gamma0))
    scan = optimize_magnification(sd.modes_b, sd.grid, HermiteFamily(b, 5))
    assert scan.z_optimum == pytest.approx(b * math.sqrt(gamma0), abs=5e-3)
    assert scan.f_optimum == pytest.approx(1.0, abs=1e-4)


def test_argmax_contract(decomp, family):
    sd = decomp(1.5)
    scan = optimize_magnification(sd.modes_b, sd.grid, family[2])
    best = int(np.argmax(scan.f_values))
    assert scan.z_optimum == scan.z_values[best]
    assert scan.f_optimum == scan.f_values.max()
    assert np.all(np.diff(scan.z_values) > 0)
    coarse = optimize_magnification(sd.modes_b, sd.grid, family[2], refine=False)
    assert scan.f_optimum >= coarse.f_optimum


def test_z_optimum_golden_and_ordering(decomp, family):
    sd = decomp(3.0)
    z = [optimize_magnification(sd.modes_b, sd.grid, tsw).z_optimum for tsw in family]
    golden = [0.5890648, 0.8196559, 1.0915089, 1.6161466, 2.0264068]
    assert z == pytest.approx(golden, rel=1e-5)
    assert np.all(np.diff(z) > 0)


def test_z_grid_validation(decomp, family):
    sd = decomp(1.5)
    with pytest.raises(DomainError):
        optimize_magnification(sd.modes_b, sd.grid, family[0], np.geomspace(0.25, 4, 10))
    with pytest.raises(DomainError):
        optimize_magnification(sd.modes_b, sd.grid, family[0], np.geomspace(0.5, 4, 64))


# --- heralded state ----------------------------------------------------------


def test_identity_filter_reproduces_unfiltered(decomp):
    sd = decomp(1.5)
    state = herald_filter(sd, CouplingMatrix(np.eye(sd.n_modes)))
    assert state.normalization == pytest.approx(sd.eigenvalues.sum(), rel=1e-12)
    assert np.allclose(np.diag(state.density_coefficients()), sd.eigenvalues / sd.eigenvalues.sum())
    s = coherence_summary(state.correlation(sd.modes_a, sd.grid))
    assert s.gamma == pytest.approx(1.5, rel=1e-2)


def test_single_mode_herald_is_pure(decomp, family):
    res = herald(GaussianBiphotonSpec(1.0, 3.0), family[-1], schmidt=decomp(3.0), M=1)
    assert res.state.purity() == pytest.approx(1.0, abs=1e-10)
    assert res.kernel.purity() == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("gamma0", [1.5, 3.0])
def test_heralded_density_valid(decomp, family, gamma0):
    for tsw in family:
        res = herald(GaussianBiphotonSpec(1.0, gamma0), tsw, schmidt=decomp(gamma0))
        rho = res.state.density_coefficients()
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(rho, rho.conj().T, atol=1e-14)
        assert np.linalg.eigvalsh(rho).min() >= -1e-10
        assert res.kernel.trace() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("gamma0", [1.5, 3.0])
def test_gamma_monotone_in_kept_modes_and_bounded(decomp, family, gamma0):
    gammas = [herald(GaussianBiphotonSpec(1.0, gamma0), tsw, schmidt=decomp(gamma0)).summary.gamma
              for tsw in family]
    assert np.all(np.diff(gammas) >= 0)
    assert all(0.49 <= g <= gamma0 + 0.01 for g in gammas)


@pytest.mark.parametrize("gamma0", [0.5, 1.5, 3.0])
def test_single_mode_herald_is_coherent(decomp, family, gamma0):
    res = herald(GaussianBiphotonSpec(1.0, gamma0), family[0], schmidt=decomp(gamma0))
    assert res.summary.gamma == pytest.approx(0.5, abs=0.05)


def test_fixed_magnification_policy(decomp, family):
    sd = decomp(1.5)
    res = herald(GaussianBiphotonSpec(1.0, 1.5), family[1], z_policy=1.3, schmidt=sd)
    assert res.z == 1.3 and res.scan is None
    with pytest.raises(DomainError):
        herald(GaussianBiphotonSpec(1.0, 1.5), family[1], z_policy="best", schmidt=sd)
    with pytest.raises(DomainError):
        herald(GaussianBiphotonSpec(1.0, 1.5), family[1], z_policy=-1.0, schmidt=sd)


def test_kept_mode_count_argument(decomp, family):
    sd = decomp(3.0)
    spec = GaussianBiphotonSpec(1.0, 3.0)
    full = herald(spec, family[-1], schmidt=sd)
    partial = herald(spec, family[-1], schmidt=sd, M=5)
    assert full.state.mode_count_kept == 15 and partial.state.mode_count_kept == 5
    assert partial.summary.gamma < full.summary.gamma
    with pytest.raises(DomainError):
        herald_filter(sd, full.coupling, M=16)


def test_degenerate_herald(decomp):
    sd = decomp(1.5)
    with pytest.raises(DegenerateHeraldError):
        herald_filter(sd, CouplingMatrix(np.zeros((sd.n_modes, 3))))


def test_family_counts_match_targets(family):
    from heraldloc.modesolver import slab_mode_count
    assert tuple(slab_mode_count(t) for t in family) == TSW_COUNTS
    assert all(isinstance(t, SlabSpec) for t in family)
