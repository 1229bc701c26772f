"""Skill-relatedness labour networks, multi-scale industry clusters, and the
labour-pooling scale scan."""

__version__ = "0.1.0"
