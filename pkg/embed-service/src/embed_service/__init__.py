"""Sentence-embedding microservice consumed by the journal evaluator."""

__version__ = "0.1.0"
