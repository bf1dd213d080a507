"""Simulator and verification lab for authenticated delegated quantum computation.

Dense linear-algebra core for qudit registers, symbolic Pauli/Clifford
machinery, two authentication schemes (random-Clifford and signed
polynomial codes), interactive verification protocols built on them, and
audit experiments that check the advertised security numbers.
"""

__version__ = "0.1.0"
