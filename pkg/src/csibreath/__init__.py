"""Single-antenna Wi-Fi respiration sensing via cross-subcarrier CSI ratios."""

__version__ = "0.1.0"
