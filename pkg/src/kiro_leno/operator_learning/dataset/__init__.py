"""Coefficient datasets and the .leno container format."""
