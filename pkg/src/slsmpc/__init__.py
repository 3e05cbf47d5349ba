"""Multi-view clustering from self-learned pairwise posterior probabilities."""

__version__ = "0.1.0"
