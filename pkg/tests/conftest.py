from __future__ import annotations

import functools
from pathlib import Path

import pytest
from hypothesis import settings

from hosclab.catalog import EXAMPLES, PAIRS
from hosclab.equiv import Bounds, compare_terms
from hosclab.traces import parse_trace
from hosclab.types import Model

GOLDEN = Path(__file__).parent / "golden"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def terms(pair: str):
    a, b = PAIRS[pair]
    return EXAMPLES[a].term(), EXAMPLES[b].term(), EXAMPLES[a].gamma()


@functools.lru_cache(maxsize=None)
def verdict(pair: str, model: Model, depth: int = 9):
    m1, m2, g = terms(pair)
    return compare_terms(m1, m2, g, model, Bounds(depth=depth))


@pytest.fixture(scope="session")
def t1():
    return parse_trace((GOLDEN / "cwl_t1.trace").read_text())


@pytest.fixture(scope="session")
def t2():
    return parse_trace((GOLDEN / "cwl_t2.trace").read_text())


@functools.lru_cache(maxsize=None)
def corpus(model: Model = Model.HOSC, depth: int = 6) -> tuple:
    """Every enumerated trace of the catalog programs and of a fixed batch
    of generated ones (canonical roots)."""
    from hosclab.equiv import term_trace_sets
    from termgen import seeded_programs

    progs = [(ex.gamma(), None, ex.term()) for ex in EXAMPLES.values()] + seeded_programs(40, seed=3)
    out = []
    for gamma, t, m in progs:
        for _, ts in term_trace_sets(m, gamma, model, Bounds(depth=depth), t):
            out.extend(ts.sorted())
    return tuple(out)
