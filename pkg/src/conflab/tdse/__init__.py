"""Time-dependent Schrodinger solver on uniform grids (hbar = 1)."""
from .grid import Grid, GridResolutionError, WaveState
from .potentials import (PotentialSpec, box, channel_profile, custom, default_walls, effective_channel,
                         free, static_channel, temporal_box)
from .propagators import (DIRICHLET, DecoheredError, PERIODIC, Boundary, InstabilityError, ObservableSeries, Observables,
                          PairResult, PreconditionError, PropagatorConfig, check_preconditions,
                          fastest_energy, mean_momentum, momentum_spread, observables, propagate,
                          propagate_pair, relative_phase, unwrap_phase)
from .states import (box_ground_state, box_state, gaussian_packet, ground_state_fidelity, hard_wall_energy,
                     product_state,
                     transverse_eigenstates)
from .walls import BarrierWalls, WidthSchedule, wall_offset, wall_profile

__all__ = [name for name in dir() if not name.startswith("_")]
