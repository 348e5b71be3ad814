"""Cost statistics of Euclidean algorithms: exact enumeration, transfer-operator
spectra, diophantine checks and limit-theorem experiments."""

__version__ = "0.1.0"
