import pathlib

import pytest

from chorus_wsi.guards import DomainDecl
from chorus_wsi.syntax import parse_module

CORPUS = pathlib.Path(__file__).resolve().parents[1] / "src" / "chorus_wsi" / "corpus"


def load(name: str):
    return parse_module((CORPUS / name).read_text())


@pytest.fixture(scope="session")
def pop2():
    return load("pop2.chor")


@pytest.fixture(scope="session")
def atm():
    return load("atm.chor")


@pytest.fixture(scope="session")
def multiparty():
    return load("pop2_multiparty.chor")


@pytest.fixture(scope="session")
def norm_eqs():
    return load("norm_eqs.chor")


@pytest.fixture(scope="session")
def pop2_domains(pop2):
    return DomainDecl.from_module(pop2)


@pytest.fixture(scope="session")
def atm_domains(atm):
    return DomainDecl.from_module(atm)


@pytest.fixture(scope="session")
def multiparty_domains(multiparty):
    return DomainDecl.from_module(multiparty)
