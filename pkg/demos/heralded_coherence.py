"""
Tailoring coherence by heralding
================================

Photon B is imaged onto slabs supporting 1 to 15 modes; detecting it there
filters photon A's state. Fewer kept modes leave photon A more coherent.
"""
from heraldloc import GaussianBiphotonSpec, SlabSpec, herald, select_tsw_family, slab_mode_count

spec = GaussianBiphotonSpec(sigma0=1.0, gamma0=3.0)
for tsw in select_tsw_family((1, 3, 5, 10, 15), SlabSpec(1.0)):
    res = herald(spec, tsw)
    s = res.summary
    print(f"{slab_mode_count(tsw):2d}-mode slab ({tsw.core_width:.3f} um): Z={res.z:.3f}, "
          f"sigma={s.sigma:.3f} um, gamma={s.gamma:.3f}, herald probability {res.state.normalization:.3f}")
