"""Co-evolving actor and game populations on a simulated planar arm."""

__version__ = "0.1.0"
