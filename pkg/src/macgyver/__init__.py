"""Tool macgyvering: score and rank tool substitutes and two-part tool
constructions for a desired action, arbitrate between them, and benchmark
the whole pipeline on synthetic desk-scale object sets."""

from .values import NEG_INF, UNATTACHABLE

__version__ = "0.1.0"

__all__ = ["NEG_INF", "UNATTACHABLE", "__version__"]
