"""Shared helpers for the test suite."""

import pytest

from qflow import corpus
from qflow.pipeline import Config, analyze


def analyze_source(src, top, **kwargs):
    """Run the full pipeline on an in-memory Verilog snippet."""
    cfg = Config(files=["<test>"], top=top, **kwargs)
    return analyze(cfg, file_texts=[("<test>", src)])


def analyze_corpus(name, top, **kwargs):
    cfg = Config(files=[corpus.path(name)], top=top, **kwargs)
    return analyze(cfg)


@pytest.fixture
def corpus_path():
    return corpus.path
