"""Numerical laboratory for Dixmier traces on truncated K-cycles."""
