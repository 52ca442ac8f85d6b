"""Curvature of disc bundles over Kähler manifolds via Taylor-mode polarized AD."""

__version__ = "0.1.0"
