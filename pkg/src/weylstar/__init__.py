"""Weyl algebra star products under arbitrary ordered expressions."""
__version__ = "0.1.0"
