"""Shallow networks whose hidden units are continuous linear functionals on
a topological vector space, with a constructive approximation pipeline and an
experiment harness.
"""

__version__ = "0.1.0"

from . import activations, constructive, network, spaces  # noqa: E402
from .constructive import ConstructionReport, approximate, compose, exp_dictionary_fit  # noqa: E402
from .network import ShallowNetwork, TrainConfig, gradients, train  # noqa: E402
from .spaces import CompactSampler, Element, Functional, SpaceDescriptor, pair  # noqa: E402

__all__ = [
    "activations", "constructive", "network", "spaces",
    "ConstructionReport", "approximate", "compose", "exp_dictionary_fit",
    "ShallowNetwork", "TrainConfig", "gradients", "train",
    "CompactSampler", "Element", "Functional", "SpaceDescriptor", "pair",
]
