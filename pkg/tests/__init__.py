"""tedkit test suite."""
