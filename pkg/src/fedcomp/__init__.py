"""Deterministic simulator for communication-efficient federated optimization.

Implements distributed gradient descent, Scaffnew (local training with
control variates), CompressedScaffnew (local training plus permutation-mask
compression) and its dual-form variant, together with parameter tuning
rules and a communication-cost accountant.
"""

__version__ = "0.1.0"
