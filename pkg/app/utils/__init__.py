"""Utility modules: combinatorics, random streams and artifact encoding."""
