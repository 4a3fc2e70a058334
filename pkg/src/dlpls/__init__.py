"""PLS with nonlinear inner models, shrinkage analysis and single-index tools."""

__version__ = "0.1.0"
