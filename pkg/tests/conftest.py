from __future__ import annotations

from pathlib import Path

import pytest

from csll.parser import parse_program
from csll.process import Program

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
CORPUS_FILES = ["lock.csll", "omega.csll", "omega_server.csll", "cas.csll", "comm.csll"]


def load_corpus(name: str) -> Program:
    path = CORPUS / name
    return parse_program(path.read_text(encoding="utf-8"), str(path))


@pytest.fixture(scope="session")
def lock() -> Program:
    return load_corpus("lock.csll")


@pytest.fixture(scope="session")
def omega() -> Program:
    return load_corpus("omega.csll")


@pytest.fixture(scope="session")
def omega_server() -> Program:
    return load_corpus("omega_server.csll")


@pytest.fixture(scope="session")
def cas() -> Program:
    return load_corpus("cas.csll")


@pytest.fixture(scope="session")
def comm() -> Program:
    return load_corpus("comm.csll")
