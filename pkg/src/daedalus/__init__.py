"""Visual analytics backend for large particle-image corpora.

Core pieces: dataset model and validation, label-informed 2D projections,
attribute-grouped grid layouts, conjunctive filtering, spatial selection,
an event-sourced label store, and an HTTP service tying them together.
"""

__version__ = "0.1.0"
