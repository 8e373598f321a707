"""Logging, report tables and figure helpers for genmeter."""
