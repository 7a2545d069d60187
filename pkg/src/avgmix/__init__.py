"""Averaging process on regular graphs: simulation and exact analytics.

Submodules
----------
graphs      regular-graph sampling (configuration model), fixtures, spectra
averaging   event-driven mass-averaging process and L^p profiles
walks       coupled random walks, exact pair-chain transients, exploration
bd_chain    slow-bond birth-and-death chain: coefficients and transients
analytics   closed-form constants, generating functions, asymptotics
experiments seeded experiment runners with CSV/JSON emission
"""

from . import analytics, averaging, bd_chain, experiments, graphs, walks
from .analytics import constants, cutoff_time
from .averaging import MassConfig, avg_update, lp_distance, simulate_avg
from .bd_chain import exact_ck, rt00, rti0, sample_bd_path
from .graphs import Graph, named_graph, sample_regular_graph, spectral_gap
from .walks import pair_chain_exact, simulate_crw, simulate_crw_tree

__version__ = "0.1.0"

__all__ = [
    "analytics", "averaging", "bd_chain", "experiments", "graphs", "walks",
    "constants", "cutoff_time", "MassConfig", "avg_update", "lp_distance",
    "simulate_avg", "exact_ck", "rt00", "rti0", "sample_bd_path", "Graph",
    "named_graph", "sample_regular_graph", "spectral_gap",
    "pair_chain_exact", "simulate_crw", "simulate_crw_tree", "__version__",
]
