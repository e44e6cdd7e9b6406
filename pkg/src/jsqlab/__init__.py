"""Stein-method and Lyapunov tooling for join-the-shortest-queue in the Halfin-Whitt regime."""

__version__ = "0.1.0"
