"""
Guided modes of a slab and of the waveguide array
=================================================

The finite-difference solver is checked against the closed-form slab modes,
then used for the 101-layer array with and without index disorder.
"""
import numpy as np

from heraldloc import DisorderSpec, SlabSpec, build_wga, slab_mode_count, solve_modes_fd
from heraldloc.modesolver import slab_mode_branches

slab = SlabSpec(core_width=2.0)
exact = np.array([m.beta for m in slab_mode_branches(slab)]) / slab.k0
fd = solve_modes_fd(slab.as_stack().sample(0.025, 30.0))
print(f"{slab_mode_count(slab)} slab modes; FD - exact effective index:", np.round(fd.effective_indices - exact, 8))

ordered = solve_modes_fd(build_wga())
print(f"ordered array: {ordered.n_modes} guided supermodes, n_eff {ordered.effective_indices[0]:.5f} "
      f"... {ordered.effective_indices[-1]:.5f}")

# disorder localizes the supermodes; the participation width shrinks
def widths(modes):
    p = modes.profiles ** 2
    return p.sum(axis=1) ** 2 / (p ** 2).sum(axis=1) * modes.grid.dx

disordered = solve_modes_fd(build_wga(disorder=DisorderSpec(0.02, seed=1)), edge_policy="drop")
print(f"median supermode width: ordered {np.median(widths(ordered)):.1f} um, "
      f"disordered {np.median(widths(disordered)):.1f} um")
