"""Exception types shared across the framework."""
from __future__ import annotations


class ArgexError(Exception):
    """Base class for all framework errors."""


class OntologyError(ArgexError):
    """Malformed ontology file or template definition."""


class CorpusError(ArgexError):
    """Malformed corpus record; carries the offending doc_id when known."""

    def __init__(self, message: str, doc_id: str | None = None):
        super().__init__(message)
        self.doc_id = doc_id


class AlignmentError(ArgexError):
    """Filled text does not align with its template scaffold."""

    def __init__(self, filled_text: str, template_text: str):
        super().__init__(
            f"filled text does not align with template scaffold: "
            f"filled={filled_text!r} template={template_text!r}"
        )
        self.filled_text = filled_text
        self.template_text = template_text


class CalibrationError(ArgexError):
    """Invalid calibration input (missing logits, empty validation set)."""


class ConstraintError(ArgexError):
    """Invalid constraint rule, bounds, or pruning input."""


class GeneratorError(ArgexError):
    """Base class for generator failures."""


class GeneratorTransportError(GeneratorError):
    """Transport failure talking to a remote generator; safe to retry."""


class GeneratorProtocolError(GeneratorError):
    """Malformed or protocol-incompatible generator response; do not retry."""


class PipelineError(ArgexError):
    """A pass aborted; names the document and event it failed on."""

    def __init__(self, message: str, doc_id: str, appearance_index: int):
        super().__init__(message)
        self.doc_id = doc_id
        self.appearance_index = appearance_index


class EvaluationError(ArgexError):
    """Predictions and gold documents disagree on keys."""


class ConfigError(ArgexError):
    """Invalid run configuration."""
