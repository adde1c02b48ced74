"""Explanation-augmented datasets: tic-tac-toe positions and synthetic loan applications."""

from tedkit.datasets.base import Dataset

__all__ = ["Dataset"]
