"""Self-supervised online intrusion detection for packet streams."""

from .aadrnn import ActivationParams, AadrnnModel, activation, fista_train, incremental_update
from .core import ConfigError, SsidConfig, SsidEngine, replay
from .ingest import PacketRecord, StreamFormatError, load_stream

__all__ = [
    "ActivationParams",
    "AadrnnModel",
    "ConfigError",
    "PacketRecord",
    "SsidConfig",
    "SsidEngine",
    "StreamFormatError",
    "activation",
    "fista_train",
    "incremental_update",
    "load_stream",
    "replay",
]
