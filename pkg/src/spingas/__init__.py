"""Dephasing maps induced by multi-qubit Ising phase gates between system and bath qubits."""

__version__ = "0.1.0"
