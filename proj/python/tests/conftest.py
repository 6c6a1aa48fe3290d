import json
import pathlib

import jsonschema
import pytest
from referencing import Registry, Resource

import mospred


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    summary = mospred.run("gen-synth", out=out, seed=3, systems=4, utterances_per_system=10, dim=6, fps=20, judges=6,
                          judges_per_utterance=3)
    return out, summary


@pytest.fixture(scope="session")
def validate():
    schemas = {p.name: json.loads(p.read_text()) for p in pathlib.Path(mospred.schema_dir()).glob("*.json")}
    registry = Registry().with_resources((name, Resource.from_contents(s)) for name, s in schemas.items())

    def check(instance, name):
        jsonschema.Draft202012Validator(schemas[name], registry=registry).validate(instance)

    return check
