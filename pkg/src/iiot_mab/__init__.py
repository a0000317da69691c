"""Distributed uplink channel selection in an IIoT factory, learned by bandits."""

from .config import (
    AgentConfig,
    ConfigError,
    GeometryConfig,
    RadioConfig,
    ScenarioConfig,
    TrafficConfig,
)
from .engine import FeedbackMessage, Simulation, TransmissionIntent, resolve_su, run
from .metrics import MetricsRecord, aggregate, convergence_time, s_tx, s_tx_at

__all__ = [
    "AgentConfig",
    "ConfigError",
    "FeedbackMessage",
    "GeometryConfig",
    "MetricsRecord",
    "RadioConfig",
    "ScenarioConfig",
    "Simulation",
    "TrafficConfig",
    "TransmissionIntent",
    "aggregate",
    "convergence_time",
    "resolve_su",
    "run",
    "s_tx",
    "s_tx_at",
]

__version__ = "0.1.0"
