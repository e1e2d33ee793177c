from __future__ import annotations

import pytest

from pml.parser import parse_facts
from pml.semantics import build_interpretation
from pml.statutes import data_path, data_text, sent_theory


@pytest.fixture(scope="session")
def sent():
    return sent_theory()


@pytest.fixture(scope="session")
def villa_doc(sent):
    return parse_facts(data_text("villa_sale.facts"), sent.signature)


@pytest.fixture(scope="session")
def villa(sent, villa_doc):
    return build_interpretation(sent.signature, villa_doc)


@pytest.fixture(scope="session")
def data():
    """Path factory for shipped data files."""
    return lambda name: str(data_path(name))
