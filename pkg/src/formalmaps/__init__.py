"""Exact formal series engine for multi matrix map counting.

Subpackages compute the same generating functions along independent
routes (direct pairing sums, loop equations, spectral curve residues,
topological recursion) so that each route checks the others.
"""

__version__ = "0.1.0"
