"""tedkit: decisions and their explanations predicted together through composite classes."""

__version__ = "0.1.0"
