import pytest

from explab.freegroup import QuotientHom, ReducedWord
from explab.schottky import schottky_symmetric

W = ReducedWord.from_str


@pytest.fixture(scope="session")
def group():
    return schottky_symmetric(2, 3.0)


@pytest.fixture(scope="session")
def commutator():
    return W("abAB")


@pytest.fixture(scope="session")
def abelianization():
    return QuotientHom.abelianization(2)


@pytest.fixture(scope="session")
def mod2():
    return QuotientHom.mod_cyclic(2, 2, [1, 0])
