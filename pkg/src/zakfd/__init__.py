"""Zak-OTFS simulation with banded frequency-domain equalisation."""

__version__ = "0.1.0"

from .zak import Constellation, GridParams, dfzt, idfzt  # noqa: E402

__all__ = ["Constellation", "GridParams", "dfzt", "idfzt", "__version__"]
