"""Finite ages, amalgamation and constraint analysis for relational structures."""
