import pytest
from fastapi.testclient import TestClient

from api import app


@pytest.fixture
def client():
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_orbits(client):
    response = client.get("/orbits/4")
    assert response.status_code == 200
    body = response.json()
    assert body["passed"]
    assert len(body["document"]["orbits"]) == 5


def test_orbits_rejects_zero(client):
    assert client.get("/orbits/0").status_code == 400


def test_richardson(client):
    response = client.get("/richardson/2,1")
    assert response.status_code == 200
    assert response.json()["document"]["norm_quotient"] == 1


def test_invalid_partition(client):
    response = client.get("/richardson/0,1")
    assert response.status_code == 400
    assert "Invalid partition" in response.json()["detail"]


def test_weights(client):
    response = client.post("/weights", json={"g": "1, 1/2; 0, 2", "partition": "2", "place": "p2"})
    assert response.status_code == 200
    assert response.json()["document"]["orthogonal"]


def test_weights_bad_place(client):
    response = client.post("/weights", json={"g": "1, 0; 0, 1", "partition": "2", "place": "p4"})
    assert response.status_code == 400


def test_local_j(client):
    response = client.post("/local-j", json={"r": 2, "d": 1, "place": "p3", "depth": 6})
    assert response.status_code == 200
    assert response.json()["passed"]


def test_coefficients(client):
    response = client.post("/coefficients", json={"partition": "2,1", "S": "inf,2", "cutoff": 300})
    assert response.status_code == 200
    body = response.json()
    assert body["passed"]
    assert len(body["document"]["development"]) == 2


def test_coefficients_of_a_non_simple_orbit(client):
    response = client.post("/coefficients", json={"partition": "3"})
    assert response.status_code == 400
