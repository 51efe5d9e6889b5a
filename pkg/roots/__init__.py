"""Analytical primitives: entropy estimators, exact oracle, geometry, restructuring."""
