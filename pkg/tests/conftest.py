import copy
import json

import pytest

from cityroute.demo import demo_network_document
from cityroute.network import ingest_network


@pytest.fixture
def square_document():
    """The built-in sample: a 100 m square with a diagonal shortcut."""
    return copy.deepcopy(demo_network_document())


@pytest.fixture
def square(square_document):
    return ingest_network(json.dumps(square_document))
