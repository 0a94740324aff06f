"""Offline embedding extraction companion for the coverline summariser.

Runs a joint image-text encoder over the frames and document tokens of
each manifest pair and writes the per-pair XMEB tables that coverline's
``--embeddings`` flag consumes. Two encoders are available: ``tiny``, a
dependency-free deterministic colour-prototype model, and ``clip``, a
wrapper around a pretrained vision-language checkpoint.
"""

from .encoders import (
    ClipEncoder,
    ModelLoadError,
    TinyColorEncoder,
    load_encoder,
)
from .extract import ExtractOptions, extract

__version__ = "0.1.0"
