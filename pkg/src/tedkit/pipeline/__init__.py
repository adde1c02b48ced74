"""Experiment harness: split, train, decode, score, report."""

from tedkit.pipeline.experiment import run_baseline, run_repeated, run_ted
from tedkit.pipeline.split import split
from tedkit.pipeline.ted import BaselineModel, TedModel

__all__ = ["BaselineModel", "TedModel", "run_baseline", "run_repeated", "run_ted", "split"]
