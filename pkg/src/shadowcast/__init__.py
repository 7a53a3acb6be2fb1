"""Controllable labeled-graph generation with a conditional walk GAN."""

from .graph import LabeledGraph, lcc, load_edge_list
from .markov import MarkovControl, empirical_markov, preset
from .metrics import GraphStats, stats
from .pipeline import generate_graph
from .train import ShadowCastModel, TrainConfig, train

__version__ = "0.1.0"
