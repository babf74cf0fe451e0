"""Spectral hole burning, hyperfine relaxation and AFC memory modelling for
Kramers rare-earth ions with nuclear spin."""

__version__ = "0.1.0"


class NumericalError(RuntimeError):
    """A computation could not produce a trustworthy number."""
