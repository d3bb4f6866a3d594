"""Storm-centric diagnostics of extratropical cyclones on lat-lon grids."""

__version__ = "0.1.0"
