"""Thermodynamic formalism on full shifts and KMS states of the Ruelle-operator C*-algebra."""

__version__ = "0.1.0"
