"""Simulation toolkit for two-electron square quantum-dot charge qubits."""

__version__ = "0.1.0"
