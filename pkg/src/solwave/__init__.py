"""Solitary waves of nonlocal dispersive equations by constrained minimization."""
