"""Manual-grounded lab Q&A service with fixed-format safety guardrails."""

__version__ = "0.1.0"
