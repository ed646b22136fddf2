import numpy as np
import pytest

from fracfisher.lib.common import ArtifactStore, StoredObject, dumps
from fracfisher.schema import Comparison


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / "out")


def test_create_and_retrieve(store):
    store.create(params=StoredObject(key="report.json", body=b"{}\n"))
    assert store.retrieve(id="report.json").body == b"{}\n"
    assert not [p for p in store.root.iterdir() if p.name.startswith(".")]


def test_create_overwrites(store):
    store.create(params=StoredObject(key="trace-sweep.csv", body=b"old"))
    store.create(params=StoredObject(key="trace-sweep.csv", body=b"new"))
    assert store.retrieve(id="trace-sweep.csv").body == b"new"


def test_list_and_delete(store):
    for key in ("trace-b.csv", "report.json", "trace-a.csv"):
        store.create(params=StoredObject(key=key, body=key.encode()))
    assert [o.key for o in store.list()] == ["report.json", "trace-a.csv", "trace-b.csv"]
    assert [o.key for o in store.list(after="trace-")] == ["trace-a.csv", "trace-b.csv"]
    assert [o.key for o in store.list(limit=1)] == ["report.json"]
    store.delete(id="report.json")
    store.delete(id="report.json")
    assert [o.key for o in store.list()] == ["trace-a.csv", "trace-b.csv"]


def test_list_of_missing_root(tmp_path):
    assert list(ArtifactStore(tmp_path / "absent").list()) == []


def test_key_cannot_escape_root(store):
    with pytest.raises(ValueError):
        store.create(params=StoredObject(key="../elsewhere.json", body=b""))


def test_dumps_is_deterministic():
    a = dumps({"b": np.float64(0.5), "a": [1, 2], "c": np.arange(3)})
    b = dumps({"c": np.arange(3), "a": [1, 2], "b": 0.5})
    assert a == b
    assert a.endswith(b"\n")
    assert a.index(b'"a"') < a.index(b'"b"') < a.index(b'"c"')


def test_report_documents_serialize_by_alias():
    check = Comparison(name="bound", lhs=1.0, rhs=2.0, tolerance=0.0)
    assert check.to_json() == dumps(check.to_dict())
    assert b'"name": "bound"' in check.to_json()
