"""Adaptive highlighting for multi-drone oversight dashboards.

Simulates a small drone fleet, a probabilistic model of where the
supervising user looks, and the user's resulting belief about the fleet;
wraps the three into a sequential decision environment and trains a
highlighting policy on it.  Ships rule-based baselines, an evaluation
harness, a CLI, and a live WebSocket session service for human-in-the-loop
runs.
"""

__version__ = "0.1.0"
