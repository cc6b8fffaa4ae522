"""Reference remote generator for the extraction pipeline's wire protocol."""

__version__ = "0.1.0"
