"""Multi-type Cannings genealogy toolkit."""

__version__ = "1.0.0"
