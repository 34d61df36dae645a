"""Graph filters: design, application, learning and distributed simulation.

Submodules are imported eagerly; the most used types are re-exported here.
Functions whose names collide across submodules (``apply``,
``frequency_response``) are reached through their module, e.g.
``graphfilt.conv.apply``.
"""

from . import apps, conv, distsim, filterbank, graph, io, learn, rational, regularized, spectral, structured
from .conv import ConvFilter
from .filterbank import FilterBank, SpectralKernel
from .graph import Graph, ShiftOperator, from_edge_list, gso
from .rational import RationalFilter
from .spectral import SpectralBasis, eigendecompose, gft

__version__ = "0.1.0"

__all__ = [
    "apps", "conv", "distsim", "filterbank", "graph", "io", "learn", "rational", "regularized",
    "spectral", "structured",
    "ConvFilter", "FilterBank", "Graph", "RationalFilter", "ShiftOperator", "SpectralBasis",
    "SpectralKernel", "eigendecompose", "from_edge_list", "gft", "gso",
]
