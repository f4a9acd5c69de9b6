"""Fast object placement assessment: dense rationality score maps in one pass."""

__version__ = "0.1.0"
