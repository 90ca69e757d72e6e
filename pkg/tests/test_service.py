import pytest
from fastapi.testclient import TestClient

from analogest import __version__
from analogest.bundled import load_bundled
from analogest.dataset import DatasetError
from analogest.estimators import AnalogyEstimator
from analogest.service import create_app


@pytest.fixture(scope="module")
def client(request):
    datasets = {name: load_bundled(name) for name in ("toy4", "demo_mixed")}
    app = create_app(datasets)
    return TestClient(app)


def test_health(client):
    response = client.get("/api/v1/health")
    assert response.status_code == 200
    body = response.json()
    assert body["version"] == __version__
    assert body["datasets"] == ["demo_mixed", "toy4"]


def test_empty_service_refused():
    with pytest.raises(DatasetError, match="at least one dataset"):
        create_app({})


def test_dataset_summaries(client):
    body = client.get("/api/v1/datasets").json()
    toy = next(d for d in body if d["label"] == "toy4")
    assert toy["n"] == 4
    size = next(f for f in toy["features"] if f["name"] == "size")
    assert size["min"] == 100.0 and size["max"] == 400.0
    assert size["size_driver"] is True


def test_excluded_peeking_has_role_but_never_values(client):
    body = client.get("/api/v1/datasets").json()
    demo = next(d for d in body if d["label"] == "demo_mixed")
    loc = next(f for f in demo["features"] if f["name"] == "loc")
    assert loc["role"] == "excluded-peeking"
    assert "min" not in loc and "max" not in loc and "levels" not in loc
    detail = client.get("/api/v1/datasets/demo_mixed/cases/D01").json()
    assert "loc" not in detail["values"]


def test_case_detail(client):
    detail = client.get("/api/v1/datasets/toy4/cases/B").json()
    assert detail == {
        "id": "B",
        "values": {"size": 200.0, "complexity": 2.0},
        "effort": 2000.0,
    }


def test_case_detail_missing_value_is_null(client):
    detail = client.get("/api/v1/datasets/demo_mixed/cases/D04").json()
    assert detail["values"]["team_experience"] is None


def test_case_detail_unknown_404(client):
    assert client.get("/api/v1/datasets/toy4/cases/ZZ").status_code == 404
    assert client.get("/api/v1/datasets/nope/cases/A").status_code == 404


def estimate_request(**overrides):
    body = {
        "dataset": "toy4",
        "target": {"size": 100.0, "complexity": 1.0},
        "config": {"k": 1},
    }
    body.update(overrides)
    return body


def test_estimate_duplicate_target(client):
    response = client.post("/api/v1/estimate", json=estimate_request())
    assert response.status_code == 200
    body = response.json()
    assert body["estimate"] == "1000.0"
    assert body["donors"][0]["case_id"] == "A"
    assert body["donors"][0]["distance"] == "0.0"


def test_estimate_stateless(client):
    first = client.post("/api/v1/estimate", json=estimate_request()).json()
    second = client.post("/api/v1/estimate", json=estimate_request()).json()
    assert first == second


def test_estimate_matches_library(client):
    dataset = load_bundled("toy4")
    target = {"size": 250.0, "complexity": 2.0}
    response = client.post(
        "/api/v1/estimate",
        json={"dataset": "toy4", "target": target, "config": {"k": 2, "pooling": "mean"}},
    ).json()
    est = AnalogyEstimator(k=2, pooling="mean").fit(dataset)
    expected = est.predict_detailed(target)
    assert response["estimate"] == repr(expected.estimate)
    assert [d["case_id"] for d in response["donors"]] == [
        d.case_id for d in expected.donors
    ]
    assert [d["distance"] for d in response["donors"]] == [
        repr(d.distance) for d in expected.donors
    ]


def test_estimate_donor_gaps_present(client):
    response = client.post("/api/v1/estimate", json=estimate_request()).json()
    gaps = response["donors"][0]["feature_gaps"]
    assert set(gaps) == {"size", "complexity"}
    assert gaps["size"] == 0.0


def test_estimate_unknown_feature_400(client):
    response = client.post(
        "/api/v1/estimate",
        json=estimate_request(target={"size": 100.0, "loc": 1.0}),
    )
    assert response.status_code == 400
    assert "loc" in response.json()["detail"]


def test_estimate_unknown_dataset_400(client):
    response = client.post("/api/v1/estimate", json=estimate_request(dataset="nope"))
    assert response.status_code == 400


def test_estimate_invalid_k_400(client):
    response = client.post(
        "/api/v1/estimate", json=estimate_request(config={"k": 0})
    )
    assert response.status_code == 400
    response = client.post(
        "/api/v1/estimate", json=estimate_request(config={"k": 99})
    )
    assert response.status_code == 400


def test_estimate_all_missing_target_422(client):
    response = client.post(
        "/api/v1/estimate",
        json=estimate_request(target={"size": None, "complexity": None}),
    )
    assert response.status_code == 422


def test_estimate_warns_on_clamped_target(client):
    response = client.post(
        "/api/v1/estimate",
        json=estimate_request(target={"size": 9999.0, "complexity": 1.0}),
    ).json()
    assert any("outside training range" in w for w in response["warnings"])
