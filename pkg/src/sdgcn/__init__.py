"""Aspect-level sentiment classification with sentiment-dependency graphs.

A bidirectional-attention aspect encoder feeding a graph convolutional
network over per-sentence aspect graphs, built on a from-scratch
reverse-mode autodiff engine, with a full training/evaluation harness.
"""

__version__ = "0.1.0"
