"""Shipped construction files."""
