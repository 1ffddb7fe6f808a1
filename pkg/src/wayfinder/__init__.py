"""Ordered-checkpoint wayfinding task: engine, metrics, service, tooling."""

__version__ = "0.1.0"
