"""Virtual MZI-mesh matrix multiplier: simulation, model fitting, evaluation."""

__version__ = "0.1.0"
