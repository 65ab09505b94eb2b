"""State-feedback synthesis with eigenvalue placement in LMI regions from experiment data."""

__version__ = "0.1.0"
