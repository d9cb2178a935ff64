"""Loss-aware teleportation simulator for optical hybrid qubits."""

__version__ = "0.1.0"
