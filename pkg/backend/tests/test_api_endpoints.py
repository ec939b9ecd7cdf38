"""
API endpoint tests for the mining service.

Each test builds its own app around a MiningSystem with the test config,
so the module-level app and its environment config are never used.
"""

from unittest.mock import Mock

import pytest
from fastapi.testclient import TestClient

from app import create_app
from mining_system import MiningSystem
from tests.conftest import FIVE_CORPUS


@pytest.fixture
def test_client(mock_config):
    return TestClient(create_app(MiningSystem(mock_config)))


@pytest.fixture
def test_client_error(mock_config):
    """Client whose mining system fails unexpectedly"""
    system = Mock()
    system.config = mock_config
    system.run.side_effect = RuntimeError("worker pool crashed")
    return TestClient(create_app(system))


def upload(text=FIVE_CORPUS):
    return {"file": ("five.basket", text.encode("utf-8"), "text/plain")}


class TestHealthEndpoint:
    def test_health(self, test_client):
        response = test_client.get("/api/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}


class TestMineEndpoint:
    """Tests for POST /api/mine"""

    def test_mine_with_scalar_minsup(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(),
            data={"algorithm": "apriori", "minsup": "3", "minconf": "0.75"},
        )

        assert response.status_code == 200
        body = response.json()
        assert len(body["rules"]) == 6
        assert body["rules"][0] == {
            "antecedent": "A",
            "consequent": "B",
            "support_count": "3",
            "support_pct": "60.000000",
            "confidence": "0.750000",
            "lift": "0.937500",
        }
        assert body["stats"]["algorithm"] == "apriori"
        assert body["stats"]["n_rules"] == 6

    def test_mine_with_table(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(),
            data={
                "algorithm": "max_constraints",
                "minsup_table": "A,2\nB,3\nC,5\n",
                "minconf": "0",
            },
        )

        assert response.status_code == 200
        pairs = {(r["antecedent"], r["consequent"]) for r in response.json()["rules"]}
        assert pairs == {("A", "B"), ("B", "A")}

    def test_scalar_minsup_for_multi_support(self, test_client):
        form = {"minsup": "3", "minconf": "0.75"}
        sar = test_client.post(
            "/api/mine", files=upload(), data={**form, "algorithm": "sar"}
        )
        sarmsmc = test_client.post(
            "/api/mine", files=upload(), data={**form, "algorithm": "sarmsmc"}
        )
        assert sar.json()["rules"] == sarmsmc.json()["rules"]

    def test_tid_items_format(self, test_client):
        text = "t1\tA B\nt2\tA B\nt3\tA\n"
        response = test_client.post(
            "/api/mine",
            files=upload(text),
            data={
                "algorithm": "sar",
                "minsup": "2",
                "minconf": "0.5",
                "format": "tid_items",
            },
        )
        assert response.status_code == 200
        assert len(response.json()["rules"]) == 2

    def test_both_minsups_rejected(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(),
            data={
                "algorithm": "sarmsmc",
                "minsup": "3",
                "minsup_table": "*,3\n",
                "minconf": "0.5",
            },
        )
        assert response.status_code == 400
        assert "exactly one" in response.json()["detail"]

    def test_table_for_single_support_rejected(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(),
            data={"algorithm": "apriori", "minsup_table": "*,3\n", "minconf": "0.5"},
        )
        assert response.status_code == 400

    def test_unknown_algorithm(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(),
            data={"algorithm": "fp_growth", "minsup": "3", "minconf": "0.5"},
        )
        assert response.status_code == 422

    def test_unknown_format(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(),
            data={"algorithm": "sar", "minsup": "3", "minconf": "0.5", "format": "xml"},
        )
        assert response.status_code == 400

    def test_bad_minsup(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(),
            data={"algorithm": "sar", "minsup": "-2", "minconf": "0.5"},
        )
        assert response.status_code == 400

    def test_empty_corpus(self, test_client):
        response = test_client.post(
            "/api/mine",
            files=upload(""),
            data={"algorithm": "sar", "minsup": "1", "minconf": "0.5"},
        )
        assert response.status_code == 400
        assert "no transactions" in response.json()["detail"]

    def test_rule_cap(self, mock_config):
        mock_config.MAX_RULES = 2
        client = TestClient(create_app(MiningSystem(mock_config)))
        response = client.post(
            "/api/mine",
            files=upload(),
            data={"algorithm": "apriori", "minsup": "1", "minconf": "0"},
        )
        assert response.status_code == 400

    def test_oversize_upload(self, test_client, mock_config):
        text = "A,B\n" * (mock_config.MAX_UPLOAD_BYTES // 4 + 1)
        response = test_client.post(
            "/api/mine",
            files=upload(text),
            data={"algorithm": "sar", "minsup": "1", "minconf": "0.5"},
        )
        assert response.status_code == 413

    def test_unexpected_failure(self, test_client_error):
        response = test_client_error.post(
            "/api/mine",
            files=upload(),
            data={"algorithm": "sar", "minsup": "3", "minconf": "0.5"},
        )
        assert response.status_code == 500
        assert "worker pool crashed" in response.json()["detail"]


class TestEqualizeEndpoint:
    """Tests for POST /api/equalize"""

    def test_equalize(self, test_client):
        response = test_client.post(
            "/api/equalize",
            files=upload(),
            data={"minsup": "3", "minconf": "0.75"},
        )

        assert response.status_code == 200
        body = response.json()
        assert body["subset_ok"] is True
        assert body["extra_rules"] == 0
        assert [(p["item"], p["threshold"]) for p in body["provenance"]] == [
            ("A", 3),
            ("B", 3),
            ("C", 3),
        ]

    def test_missing_minconf(self, test_client):
        response = test_client.post(
            "/api/equalize", files=upload(), data={"minsup": "3"}
        )
        assert response.status_code == 422

    def test_bad_minconf(self, test_client):
        response = test_client.post(
            "/api/equalize",
            files=upload(),
            data={"minsup": "3", "minconf": "often"},
        )
        assert response.status_code == 400
