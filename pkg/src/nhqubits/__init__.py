"""Two weakly coupled driven lossy qubits near a fourth-order exceptional point."""

__version__ = "0.1.0"
