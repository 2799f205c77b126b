"""First passage of Lévy processes over a level: transforms, expansions, limits and simulation."""

__version__ = "0.1.0"
