"""Expressions, integration, transforms, estimation and the built-in problems."""
