"""
Transverse localization of a heralded photon
============================================

Propagate heralded photons through ordered and disordered arrays and compare
how much their effective width grows over 500 um.
"""
import warnings

import numpy as np

from heraldloc import (ArrayGeometry, GaussianBiphotonSpec, SlabSpec, TransportExperiment, ensemble_run_batch,
                       herald, schmidt_decompose, select_tsw_family)
from heraldloc.transport import LowCaptureWarning

warnings.simplefilter("ignore", LowCaptureWarning)  # captured fractions are reported below instead

tsw = select_tsw_family((15,), SlabSpec(1.0))[0]
z = np.linspace(0.0, 500.0, 6)
for delta in (0.0, 0.02):
    experiments = []
    for gamma0 in (0.5, 1.5, 3.0):
        spec = GaussianBiphotonSpec(1.0, gamma0)
        sd = schmidt_decompose(spec)
        state = herald(spec, tsw, schmidt=sd).state
        experiments.append(TransportExperiment(state, sd.modes_a, sd.grid, ArrayGeometry(), delta))
    for gamma0, res in zip((0.5, 1.5, 3.0), ensemble_run_batch(experiments, z, realizations=10, master_seed=1)):
        print(f"delta={delta} gamma0={gamma0}: w(z)/w(0) = {np.round(res.mean_ratio, 2)} "
              f"(captured {res.captured_fraction:.2f})")
