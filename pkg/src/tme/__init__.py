"""Topological multi-entropy measures on lattice wavefunctions.

Evaluates replica-permutation overlaps <psi^R| pi_A pi_B pi_C |psi^R> on a
three-region "pizza" partition (A, B, C surrounded by Lambda), exactly for
Gaussian fermion states (gapped honeycomb spin liquid, Chern insulator) and
stochastically for a bosonic Laughlin wavefunction on the sphere, and compares
the extracted universal phases against closed-form predictions.
"""

__version__ = "0.1.0"
