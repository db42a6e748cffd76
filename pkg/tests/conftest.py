"""Shared desk instances."""
import json

import pytest

from app.models.population import CanningsModel, MutationLaw, WrightFisherLaw
from app.models.rates import XiAtom, XiSpec
from app.services.offspring_service import strong_mutation_model


@pytest.fixture
def wf_model():
    """Wright-Fisher, N = (4, 6), counts ((3, 2), (1, 4))."""
    return CanningsModel(N=(4, 6), law=WrightFisherLaw(counts=((3, 2), (1, 4))))


@pytest.fixture
def mutation_model():
    """Mutation law, N = (4, 5, 7)."""
    return CanningsModel(N=(4, 5, 7), law=MutationLaw(counts=((1, 2, 1), (1, 0, 4), (2, 3, 2))))


@pytest.fixture
def single_type_wf():
    return CanningsModel(N=(5,), law=WrightFisherLaw(counts=((5,),)))


@pytest.fixture
def strong_model():
    return strong_mutation_model(3, 2)


@pytest.fixture
def xi_spec():
    """No Kingman part, one atom of mass 1 at x = (1/2, 1/4), y = (type 1, type 2)."""
    return XiSpec(a=(0.0, 0.0), atoms=(XiAtom(mass=1.0, x=(0.5, 0.25), y=(0, 1)),))


@pytest.fixture
def write_json(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


@pytest.fixture
def wf_file(write_json):
    return write_json("wf.json", {"d": 2, "N": [4, 6], "law": "wright-fisher", "counts": [[3, 2], [1, 4]]})
