"""chevflag: exact flag-module workbench for simply-laced Chevalley groups."""

__version__ = "0.1.0"
