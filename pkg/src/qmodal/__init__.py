"""Block-encoding and qubitization circuits for coupled-oscillator modal analysis."""

__version__ = "0.1.0"
