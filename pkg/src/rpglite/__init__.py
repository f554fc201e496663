"""rpglite: two-player turn-based tactics engine, exact solver, balance
analytics, simulation tooling, and an authoritative game service."""

__version__ = "0.1.0"
