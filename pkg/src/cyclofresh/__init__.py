"""Two-stage FRESH-filter receiver simulation for OFDM over cyclostationary
narrowband PLC noise: signal/noise models, closed-form and adaptive receiver
synthesis, FEC chain, and the sweep harness."""

from . import (  # noqa: F401
    adaptive,
    channel,
    fec,
    fresh_design,
    fresh_runtime,
    harness,
    noise,
    ofdm,
    signal_core,
)

__version__ = "0.1.0"
