"""Learn contact-based manipulation primitives from one object-level demonstration
and replay them on a simulated serial arm."""

__version__ = "0.1.0"
