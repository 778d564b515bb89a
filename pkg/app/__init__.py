"""Time-varying parameter boosting for forecasting."""

__version__ = "0.1.0"
