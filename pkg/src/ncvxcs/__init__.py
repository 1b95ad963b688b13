"""Nonconvex (SCAD/MCP) compressed sensing: AMP, state evolution and replica analysis."""

__version__ = "0.1.0"
