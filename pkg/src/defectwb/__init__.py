"""Desk-scale checks for defects in perturbative field theory.

Exact rational cochain complexes, shifted pairings and Lagrangian checks sit at
the bottom; on top of them are the collapse map near a defect, the Weyl/Fock
defect line, the scalar boundary-jet model, BF and Wilson-line defects, and
first-order Yang-Mills with the Dirac monopole.
"""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
