import pytest
from fastapi.testclient import TestClient

from main import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_home(client):
    assert client.get("/").json() == {"message": "Relational Similarity API is running"}


def test_distances(client, fig3_text):
    response = client.post("/distances", json={"dataset": fig3_text, "include_components": True})
    assert response.status_code == 200
    body = response.json()
    assert body["ids"] == ["A", "B"]
    assert body["matrix"][0][1] == pytest.approx(0.8)
    assert set(body["components"]) == {"ad", "nad", "cd", "nd", "ed"}


def test_distances_bad_dataset_is_400(client):
    response = client.post("/distances", json={"dataset": "bogus line\n"})
    assert response.status_code == 400
    assert "line 1" in response.json()["detail"]


def test_distances_bad_weights_is_422(client, fig3_text):
    response = client.post("/distances", json={"dataset": fig3_text, "weights": [0.5, 0.5, 0.5, 0, 0]})
    assert response.status_code == 422


def test_cluster_with_labels(client):
    payload = {
        "ids": ["a", "b", "c", "d"],
        "matrix": [[0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0]],
        "k": 2,
        "labels": {"a": "x", "b": "x", "c": "y", "d": "y"},
    }
    body = client.post("/cluster", json=payload).json()
    assert body["assignment"] == {"a": 0, "b": 0, "c": 1, "d": 1}
    assert body["method"] == "agglomerative"
    assert body["ari"] == 1.0


def test_cluster_shape_mismatch_is_400(client):
    payload = {"ids": ["a", "b", "c"], "matrix": [[0, 1], [1, 0]], "k": 2}
    assert client.post("/cluster", json=payload).status_code == 400


def test_cluster_bad_k_is_422(client):
    payload = {"ids": ["a", "b"], "matrix": [[0, 1], [1, 0]], "k": 3}
    assert client.post("/cluster", json=payload).status_code == 422


def test_inspect_tree(client, fig3_text):
    body = client.post("/inspect-tree", json={"dataset": fig3_text, "vertex": "A"}).json()
    assert body["root"] == "A"
    assert body["dump"].startswith("root A type=object depth=1\n")


def test_inspect_tree_unknown_vertex_is_422(client, fig3_text):
    response = client.post("/inspect-tree", json={"dataset": fig3_text, "vertex": "Z"})
    assert response.status_code == 422
