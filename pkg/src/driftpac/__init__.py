"""PAC-grounded classification learning over drifting domains."""

__version__ = "0.1.0"
