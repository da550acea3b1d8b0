"""Link prediction on port-level analog circuit graphs."""

__version__ = "0.1.0"
