"""pcforge: evolutionary synthesis of approximate popcount-compare
circuits and their integration into bespoke ternary-network netlists."""

__version__ = "0.1.0"
