"""mabex: a self-explaining reactive engine.

Executes scenario specifications against an object world, evaluates
causality trees, detects explanation needs, and renders recipient-tailored
answers to why-, follow-up and when-questions. A FastAPI service exposes
live sessions; the `mabex` CLI is a thin client of that service.
"""

__version__ = "0.1.0"
