"""Heralded Schmidt-mode filtering of single-photon coherence and its transverse
localization in disordered waveguide arrays."""

__version__ = "0.1.0"

from .biphoton import (CoherenceSummary, CorrelationKernel, GaussianBiphotonSpec, SchmidtDecomposition,
                       assemble_g1, biphoton_kernel, coherence_summary, derive_alpha_beta,
                       entanglement_entropy, schmidt_decompose, schmidt_number)
from .grid import SpatialGrid
from .herald import (CouplingMatrix, HeraldedState, MagnificationScan, couple, herald, herald_filter,
                     heralded_coherence, magnify, optimize_magnification, overlap_factor)
from .modesolver import (DisorderSpec, GuidedModeSet, IndexProfile, LayerStack, SlabSpec, build_wga,
                         select_tsw_family, slab_mode_count, solve_modes_fd, solve_slab_modes)
from .transport import (ArrayGeometry, EnsembleResult, IntensityProfile, TransportExperiment, effective_width,
                        ensemble_run, ensemble_run_batch, propagate_intensity)
