"""CLI module for qres."""
