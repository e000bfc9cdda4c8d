"""Numerical toolkit for moduli of continuity, analytic smoothing, and
frequency-preserving KAM runs at desk scale.

Subpackages:
    modulus      -- moduli of continuity and their structural properties
    regularity   -- Dini-type integrability, critical exponents, remaining regularity
    jackson      -- smoothing kernel, torus functions, approximation error checks
    diophantine  -- lattice certification of Diophantine frequencies
    kam          -- Hamiltonian models and the frequency-preserving iteration
    cli          -- batch front-end
"""

from kamreg.errors import AnalysisError, DomainError, HypothesisError, ResonanceError

__all__ = [
    "AnalysisError",
    "DomainError",
    "HypothesisError",
    "ResonanceError",
]

__version__ = "0.1.0"
