"""Multi-agent LLM translation workflows and human-evaluation aggregation."""

__version__ = "0.1.0"
