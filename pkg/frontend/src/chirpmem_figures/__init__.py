"""Figure renderer for chirpmem reproduce bundles."""

__version__ = "0.1.0"

from .render import BundleError, FIGURES, render

__all__ = ["BundleError", "FIGURES", "render"]
