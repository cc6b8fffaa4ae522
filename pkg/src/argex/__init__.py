"""Confidence-scheduled document-level event argument extraction.

Core pieces: corpus and ontology ingestion, a pluggable template-filling
generator, per-document prediction memory with similarity retrieval,
temperature-scaling calibration, simple-to-complex event scheduling,
confidence-bounded decoding constraints, and span-matching evaluation.
"""

__version__ = "0.1.0"

from .errors import ArgexError

__all__ = ["ArgexError", "__version__"]
