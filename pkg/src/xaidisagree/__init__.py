"""Explainability methods for binary probabilistic classifiers and metrics
for how much their explanations disagree."""

__version__ = "0.1.0"
