import numpy as np
import pytest

from mixlab.cocycle import SkewSystem
from mixlab.groups import SU2, Torus
from mixlab.sft import MetricConstant, build_shift
from mixlab.thermo import LocallyConstantFn, gibbs
from mixlab.utils import parse_word

GOLDEN = (1 + 5 ** 0.5) / 2


def make_fn(shift, spec, codomain="real", group=None):
    """A constant, or a {word: value} table whose depth is the key length."""
    if isinstance(spec, dict):
        mapping = {parse_word(k): v for k, v in spec.items()}
        depth = len(next(iter(mapping)))
        return LocallyConstantFn.from_mapping(shift, depth, mapping, codomain, group)
    return LocallyConstantFn.constant(shift, spec, 1, codomain, group)


def make_system(shift, roof=1.0, cocycle=None, group=None, potential=None, lam=0.5):
    group = group or Torus(1)
    cocycle_fn = make_fn(shift, group.identity() if cocycle is None else cocycle, "group", group)
    return SkewSystem(
        shift=shift,
        lam=MetricConstant(lam),
        roof=make_fn(shift, roof),
        cocycle=cocycle_fn,
        group=group,
        potential=None if potential is None else make_fn(shift, potential),
    )


@pytest.fixture
def full2():
    return build_shift([[1, 1], [1, 1]])


@pytest.fixture
def golden_shift():
    """Symbol 0 cannot repeat."""
    return build_shift([[0, 1], [1, 1]])


@pytest.fixture
def three_state():
    return build_shift([[1, 1, 0], [0, 1, 1], [1, 1, 1]])


@pytest.fixture
def lam():
    return MetricConstant(0.5)


@pytest.fixture
def torus():
    return Torus(1)


@pytest.fixture
def su2():
    return SU2()


@pytest.fixture
def golden_roof_system(full2):
    """Full 2-shift, roof {1, γ}, trivial T^1 cocycle."""
    return make_system(full2, roof={"0": 1.0, "1": GOLDEN})


@pytest.fixture
def golden_roof_gibbs(golden_roof_system):
    sys = golden_roof_system
    return gibbs(sys.shift, sys.potential)


@pytest.fixture
def golden_angle_system(full2):
    """Full 2-shift, r ≡ 1, torus angles {0, 2πγ}."""
    return make_system(full2, cocycle={"0": [0.0], "1": [2 * np.pi * GOLDEN]})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
