"""Adaptive multipath load balancing over DiffServ routers, driven by probe-based admission control."""

__version__ = "0.1.0"
