"""Figure presets: each turns a configuration into named columnar tables.

Column orders are fixed and listed in ``COLUMNS``; they are part of the output format.
"""
from __future__ import annotations

import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .. import __version__
from ..biphoton import GaussianBiphotonSpec, entanglement_entropy, schmidt_decompose, schmidt_number
from ..errors import HeraldlocError
from ..herald import herald, optimize_magnification
from ..modesolver import SlabSpec, select_tsw_family, slab_mode_count
from ..transport import ArrayGeometry, TransportExperiment, ensemble_run_batch
from .config import ExperimentConfig

PRESETS = ("fig1", "fig3", "fig4", "fig5", "custom")

FIG1_GAMMAS = (0.5, 1.5, 3.0)
FIG1_PROFILE_GAMMA = 1.5
FIG1_PROFILE_MODES = (1, 2, 3, 4, 5)
FIG1_SPECTRUM_MODES = 15
FIG3_GAMMAS = (0.5, 1.5, 3.0)
FIG3_WIDTHS = np.linspace(0.05, 10.0, 200)
FIG4_GAMMAS = (0.5, 1.0, 3.0)
FIG5_GAMMAS = (0.5, 1.5, 3.0)

_COHERENCE = ("preset", "gamma0", "tsw_modes", "core_width_um", "z_magnification", "sigma_um",
              "W_per_um", "gamma", "herald_probability")
_LOCALIZATION = ("preset", "gamma0", "tsw_modes", "delta", "z_um", "mean_ratio", "stderr", "realizations")

COLUMNS = {
    "fig1_spectrum": ("preset", "gamma0", "j", "lambda"),
    "fig1_summary": ("preset", "gamma0", "retained_modes", "schmidt_number", "entropy_bits"),
    "fig1_modes": ("preset", "gamma0", "j", "x_um", "f"),
    "fig3_mode_count": ("preset", "core_width_um", "mode_count"),
    "fig3_overlap": ("preset", "gamma0", "tsw_modes", "core_width_um", "z", "F"),
    "fig3_optimum": ("preset", "gamma0", "tsw_modes", "core_width_um", "z_optimum", "F_optimum"),
    "fig4_coherence": _COHERENCE,
    "fig5_localization": _LOCALIZATION,
    "custom_coherence": _COHERENCE,
    "custom_localization": _LOCALIZATION,
}


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"row of length {len(row)} for {len(self.columns)} columns")
        self.rows.append(row)

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


@dataclass
class ResultSet:
    manifest: dict
    tables: dict = field(default_factory=dict)

    def new_table(self, name: str) -> Table:
        table = Table(COLUMNS[name])
        self.tables[name] = table
        return table


def _spec(config: ExperimentConfig, gamma0: float) -> GaussianBiphotonSpec:
    return GaussianBiphotonSpec(config.biphoton.sigma0, gamma0)


def _family(config: ExperimentConfig):
    template = SlabSpec(1.0, config.tsw.n_core, config.tsw.n_clad, config.wavelength)
    return select_tsw_family(config.tsw.target_mode_counts, template)


def _z_grid(config: ExperimentConfig):
    im = config.imaging
    return np.geomspace(im.scan_min, im.scan_max, im.scan_samples)


def _geometry(config: ExperimentConfig) -> ArrayGeometry:
    w = config.wga
    return ArrayGeometry(w.n_layers, w.layer_thickness, w.n_high, w.n_low, w.background_index,
                         w.grid_step, w.padding, config.wavelength)


def _heralded_family(config: ExperimentConfig, gamma0: float):
    spec = _spec(config, gamma0)
    schmidt = schmidt_decompose(spec)
    return schmidt, [herald(spec, tsw, config.imaging.z_policy, schmidt, z_grid=_z_grid(config))
                     for tsw in _family(config)]


def _coherence_rows(table: Table, preset: str, gamma0: float, results):
    for r in results:
        s = r.summary
        table.add(preset, gamma0, slab_mode_count(r.tsw), r.tsw.core_width, r.z, s.sigma, s.W, s.gamma,
                  r.state.normalization)


def _localization_rows(table: Table, preset: str, config: ExperimentConfig, gammas):
    run = config.run
    z = np.linspace(0.0, run.z_max, run.z_samples)
    geometry = _geometry(config)
    families = {g: _heralded_family(config, g) for g in gammas}
    for delta in (0.0, config.disorder.delta):
        experiments, labels = [], []
        for g, (schmidt, results) in families.items():
            for r in results:
                experiments.append(TransportExperiment(r.state, schmidt.modes_a, schmidt.grid, geometry,
                                                       delta, averaging=run.averaging))
                labels.append((g, slab_mode_count(r.tsw)))
        ensembles = ensemble_run_batch(experiments, z, run.realizations, config.disorder.master_seed,
                                       run.workers)
        for (g, m), ens in zip(labels, ensembles):
            for zi, mean, err in zip(ens.z_samples, ens.mean_ratio, ens.stderr):
                table.add(preset, g, m, delta, zi, mean, err, ens.realization_count)


def _fig1(config, out: ResultSet):
    spectrum, summary, modes = (out.new_table(n) for n in ("fig1_spectrum", "fig1_summary", "fig1_modes"))
    for g in FIG1_GAMMAS:
        spec = _spec(config, g)
        sd = schmidt_decompose(spec)
        for j, lam in enumerate(sd.eigenvalues[:FIG1_SPECTRUM_MODES], start=1):
            spectrum.add("fig1", g, j, lam)
        fine = schmidt_decompose(spec, epsilon_trunc=1e-10)
        summary.add("fig1", g, sd.n_modes, schmidt_number(sd.eigenvalues),
                    entanglement_entropy(fine.eigenvalues))
        if g == FIG1_PROFILE_GAMMA:
            for j in FIG1_PROFILE_MODES:
                if j <= sd.n_modes:
                    for x, f in zip(sd.grid.x, sd.modes_a[j - 1]):
                        modes.add("fig1", g, j, x, f)


def _fig3(config, out: ResultSet):
    counts, overlap, optimum = (out.new_table(n) for n in ("fig3_mode_count", "fig3_overlap", "fig3_optimum"))
    template = SlabSpec(1.0, config.tsw.n_core, config.tsw.n_clad, config.wavelength)
    for width in FIG3_WIDTHS:
        counts.add("fig3", float(width), slab_mode_count(template.with_width(float(width))))
    for g in FIG3_GAMMAS:
        sd = schmidt_decompose(_spec(config, g))
        for tsw in _family(config):
            scan = optimize_magnification(sd.modes_b, sd.grid, tsw, _z_grid(config))
            m = slab_mode_count(tsw)
            for z, f in zip(scan.z_values, scan.f_values):
                overlap.add("fig3", g, m, tsw.core_width, z, f)
            optimum.add("fig3", g, m, tsw.core_width, scan.z_optimum, scan.f_optimum)


def _fig4(config, out: ResultSet):
    table = out.new_table("fig4_coherence")
    for g in FIG4_GAMMAS:
        _, results = _heralded_family(config, g)
        _coherence_rows(table, "fig4", g, results)


def _fig5(config, out: ResultSet):
    _localization_rows(out.new_table("fig5_localization"), "fig5", config, FIG5_GAMMAS)


def _custom(config, out: ResultSet):
    g = config.biphoton.gamma0
    _, results = _heralded_family(config, g)
    _coherence_rows(out.new_table("custom_coherence"), "custom", g, results)
    _localization_rows(out.new_table("custom_localization"), "custom", config, (g,))


_RUNNERS = {"fig1": _fig1, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "custom": _custom}


class PresetError(HeraldlocError):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_preset(preset: str, config: ExperimentConfig) -> ResultSet:
    """Compute every table of a figure preset."""
    if preset not in _RUNNERS:
        raise PresetError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    manifest = {
        "preset": preset,
        "code_version": __version__,
        "master_seed": config.disorder.master_seed,
        "config": config.echo(),
        "environment": {"python": platform.python_version(), "numpy": np.__version__},
        "started_utc": _now(),
    }
    out = ResultSet(manifest)
    try:
        _RUNNERS[preset](config, out)
    except HeraldlocError as exc:
        raise PresetError(f"preset {preset} (sigma0={config.biphoton.sigma0}, "
                          f"gamma0={config.biphoton.gamma0}): {exc}") from exc
    manifest["finished_utc"] = _now()
    return out
