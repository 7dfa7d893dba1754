"""Liouville-space spectral analysis of two detuned qubits in a common bath.

The package links the slowest Liouvillian modes to two observable
diagnostics: delayed-Pearson synchronization of local Bloch components and
subradiant emission.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Observable,
    SystemParams,
    dressed_one_excitation_eigenstates,
    hs_inner,
    local_pauli,
    named_state,
    vectorize,
    devectorize,
)
from .liouvillian import build_full, build_sectors, verify_block_structure  # noqa: E402
from .spectral import (  # noqa: E402
    CollectiveStates,
    DegenerateSpectrum,
    IndependentAtoms,
    SpectralDecomposition,
    collective_states,
    coupling_parameter,
    decompose,
    mode_weights,
    sync_constants,
)
from .dynamics import Trajectory, evolve, evolve_modal, propagate_rk4  # noqa: E402

__all__ = [
    "Observable",
    "SystemParams",
    "dressed_one_excitation_eigenstates",
    "hs_inner",
    "local_pauli",
    "named_state",
    "vectorize",
    "devectorize",
    "build_full",
    "build_sectors",
    "verify_block_structure",
    "CollectiveStates",
    "DegenerateSpectrum",
    "IndependentAtoms",
    "SpectralDecomposition",
    "collective_states",
    "coupling_parameter",
    "decompose",
    "mode_weights",
    "sync_constants",
    "Trajectory",
    "evolve",
    "evolve_modal",
    "propagate_rk4",
]
