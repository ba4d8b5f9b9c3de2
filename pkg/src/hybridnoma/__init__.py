"""Max-min joint time and power allocation for hybrid TDMA-NOMA downlinks."""

__version__ = "0.1.0"
