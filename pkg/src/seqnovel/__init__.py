"""Novelty detection for discrete sequences: topic-ensemble informed clusters
with one LSTM language model per cluster, scored by perplexity."""

__version__ = "0.1.0"
