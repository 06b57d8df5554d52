"""Classifier interface and the CART decision tree."""
