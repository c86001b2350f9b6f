"""PosterForge: full-workflow poster generation with an editable HTML core.

Natural-language requirement -> design blueprint -> styled background ->
constrained-HTML poster, plus the metrics and dataset tooling around that
pipeline. Every generator is pluggable; deterministic mock backends make the
whole workflow reproducible without any hosted model.
"""

__version__ = "0.1.0"


class PosterForgeError(Exception):
    """Base class for all domain errors raised by this package."""
