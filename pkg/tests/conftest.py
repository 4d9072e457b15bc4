"""
Shared fixtures
"""
import os

# small prefilters keep the many test graphs cheap; set before settings load
os.environ.setdefault("ESTIMNET_PREFILTER_CAPACITY", "4096")

import numpy as np
import pytest

from estimnet.models.attributes import MISSING, AttributeKind, AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import Effect, EffectKind, ModelSpec
from estimnet.utils.rng import RandomStream


def random_digraph(n: int, density: float, seed: int) -> Digraph:
    rng = np.random.default_rng(seed)
    X = rng.random((n, n)) < density
    np.fill_diagonal(X, False)
    return Digraph.from_arcs(n, ((int(i), int(j)) for i, j in zip(*np.nonzero(X))))


def random_attributes(n: int, seed: int, missing: bool = True) -> AttributeSet:
    rng = np.random.default_rng(seed)
    attrs = AttributeSet(n)
    binary = rng.integers(0, 2, size=n)
    categories = rng.integers(0, 3, size=n)
    continuous = rng.normal(size=n)
    if missing:
        binary[0] = MISSING
        categories[1] = MISSING
        continuous[2] = np.nan
    # dense codes from 0
    _, categories_dense = np.unique(categories[categories != MISSING], return_inverse=True)
    categories[categories != MISSING] = categories_dense
    attrs.add_column(AttributeKind.BINARY, "b", binary)
    attrs.add_column(AttributeKind.CATEGORICAL, "c", categories)
    attrs.add_column(AttributeKind.CONTINUOUS, "u", continuous)
    return attrs


def all_effects_model() -> ModelSpec:
    effects = []
    for kind in EffectKind:
        attribute_kind = kind.attribute_kind
        if attribute_kind is None:
            effects.append(Effect(kind=kind))
        else:
            name = {AttributeKind.BINARY: "b", AttributeKind.CATEGORICAL: "c", AttributeKind.CONTINUOUS: "u"}
            effects.append(Effect(kind=kind, attribute=name[attribute_kind]))
    effects.append(Effect(kind=EffectKind.AINS, lam=3.0))
    effects.append(Effect(kind=EffectKind.AT_T, lam=1.5))
    return ModelSpec(effects=effects)


@pytest.fixture
def rng():
    return RandomStream(12345, (0,))


@pytest.fixture
def full_model() -> ModelSpec:
    return all_effects_model()


@pytest.fixture
def attrs30() -> AttributeSet:
    return random_attributes(30, seed=7)
