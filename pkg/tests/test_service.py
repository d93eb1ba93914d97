import pytest
from fastapi.testclient import TestClient

from cotforge.events import ReviewStore
from cotforge.orchestrator import Orchestrator
from cotforge.providers import mock_providers
from cotforge.service import ReviewService, create_app
from cotforge.simulation import (
    ideal_rationale,
    make_synthetic_pool,
    simulation_lm,
    simulation_scoring_config,
)


class FakeClock:
    def __init__(self, now=1000.0):
        self.now = now

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


@pytest.fixture
def harness(tmp_path):
    """Service wired to an orchestrator over a small synthetic pool.

    One level-0 round has already run, so the queue holds low-quality
    candidates awaiting refinement.
    """
    pool = make_synthetic_pool(5, seed=5)
    store = ReviewStore(tmp_path / "data", snapshot_interval=50)
    clock = FakeClock()
    service = ReviewService(
        store=store,
        pool=pool,
        scoring_config=simulation_scoring_config(),
        lm=simulation_lm(pool),
        clock=clock,
    )
    orch = Orchestrator(
        pool=pool,
        providers=mock_providers(seed=5),
        scoring_config=service.scoring_config,
        lm=service.lm,
        pos_lexicon=service.pos_lexicon,
        on_queue=service.enqueue_candidate,
        update_batch_size=10**9,
    )
    service.orchestrator = orch
    service.record_round(orch.run_round())
    return service, orch, clock


@pytest.fixture
def client(harness):
    service, _, _ = harness
    return TestClient(create_app(service))


def queue_ids(client, **params):
    body = client.get("/queue", params=params).json()
    return [e["candidate_id"] for e in body["entries"]]


def ideal_text_for(service, candidate_id):
    candidate = service.pool.candidates[candidate_id]
    sample = service.pool.samples[candidate.video_id]
    return ideal_rationale(sample, sample.qa(candidate.qa_id))


class TestQueueEndpoint:
    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_queue_is_sorted_worst_first(self, client):
        body = client.get("/queue").json()
        assert body["total"] == 5
        scores = [e["score"]["aggregate"] for e in body["entries"]]
        assert scores == sorted(scores)

    def test_pagination_is_stable_and_disjoint(self, client):
        p1 = queue_ids(client, page=1, page_size=2)
        p2 = queue_ids(client, page=2, page_size=2)
        p3 = queue_ids(client, page=3, page_size=2)
        assert len(p1) == len(p2) == 2 and len(p3) == 1
        assert len({*p1, *p2, *p3}) == 5
        assert queue_ids(client, page=1, page_size=2) == p1

    def test_score_filters(self, client):
        assert client.get("/queue", params={"min_score": 0.99}).json()["total"] == 0
        assert client.get("/queue", params={"max_score": 1.0}).json()["total"] == 5

    def test_variant_filter_validation(self, client):
        assert client.get("/queue", params={"variant": "bogus"}).status_code == 400
        assert client.get("/queue", params={"variant": "topic_cot"}).json()["total"] == 0

    def test_page_size_bounds(self, client):
        assert client.get("/queue", params={"page_size": 0}).status_code == 400
        assert client.get("/queue", params={"page_size": 201}).status_code == 400

    def test_entries_start_unclaimed(self, client):
        body = client.get("/queue").json()
        assert all(e["claim"] == {"claimed": False} for e in body["entries"])


class TestCandidateEndpoint:
    def test_queued_candidate_view(self, client):
        cid = queue_ids(client)[0]
        body = client.get(f"/candidates/{cid}").json()
        assert body["candidate_id"] == cid
        assert "text" in body and "question" in body

    def test_unknown_candidate_404(self, client):
        assert client.get("/candidates/cand-nope").status_code == 404


class TestClaim:
    def test_claim_happy_path(self, client):
        cid = queue_ids(client)[0]
        res = client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        assert res.status_code == 200
        entry = client.get(f"/candidates/{cid}").json()
        assert entry["claim"]["claimed"] is True
        assert entry["claim"]["expert_id"] == "e1"

    def test_conflicting_claim_409(self, client):
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        res = client.post(f"/queue/{cid}/claim", json={"expert_id": "e2"})
        assert res.status_code == 409

    def test_same_expert_can_renew(self, client):
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        res = client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        assert res.status_code == 200

    def test_expired_lease_can_be_reclaimed(self, harness):
        service, _, clock = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1", "lease_seconds": 60})
        clock.advance(61)
        res = client.post(f"/queue/{cid}/claim", json={"expert_id": "e2"})
        assert res.status_code == 200
        assert client.get(f"/candidates/{cid}").json()["claim"]["expert_id"] == "e2"

    def test_claim_validation(self, client):
        cid = queue_ids(client)[0]
        assert client.post(f"/queue/{cid}/claim", json={"expert_id": ""}).status_code == 400
        assert (
            client.post(
                f"/queue/{cid}/claim", json={"expert_id": "e1", "lease_seconds": -5}
            ).status_code
            == 400
        )
        assert client.post("/queue/cand-nope/claim", json={"expert_id": "e1"}).status_code == 404


class TestRefine:
    def refine(self, client, service, cid, expert="e1", text=None):
        if text is None:
            text = ideal_text_for(service, cid)
        return client.post(
            f"/queue/{cid}/refine", json={"expert_id": expert, "refined_text": text}
        )

    def test_requires_live_claim(self, harness):
        service, _, _ = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        assert self.refine(client, service, cid).status_code == 403

    def test_requires_same_expert(self, harness):
        service, _, _ = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        assert self.refine(client, service, cid, expert="e2").status_code == 403

    def test_expired_claim_forbidden(self, harness):
        service, _, clock = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1", "lease_seconds": 30})
        clock.advance(31)
        assert self.refine(client, service, cid).status_code == 403

    def test_text_must_differ(self, harness):
        service, _, _ = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        original = client.get(f"/candidates/{cid}").json()["text"]
        assert self.refine(client, service, cid, text=original).status_code == 400
        assert self.refine(client, service, cid, text="").status_code == 400

    def test_successful_refine_rescores(self, harness):
        service, _, _ = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        res = self.refine(client, service, cid)
        assert res.status_code == 200
        body = res.json()
        assert body["rescored"]["aggregate"] == 1.0
        assert body["delta"] == pytest.approx(1.0 - body["previous_aggregate"])
        assert body["below_threshold"] is False

    def test_refined_candidate_leaves_queue_and_is_accepted(self, harness):
        service, orch, _ = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        self.refine(client, service, cid)
        assert cid not in queue_ids(client)
        assert client.get(f"/candidates/{cid}").json()["status"] == "accepted"
        assert len(orch.pool.training_pairs) == 1

    def test_double_refine_forbidden(self, harness):
        service, _, _ = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        self.refine(client, service, cid)
        assert self.refine(client, service, cid).status_code == 404


class TestStats:
    def test_initial_stats(self, client):
        body = client.get("/stats").json()
        assert body["queue_depth"] == 5
        assert body["acceptance_rate"] == 0.0
        assert body["refinement_count"] == 0
        assert sum(body["score_histogram"].values()) == 5

    def test_stats_after_refinements(self, harness):
        service, _, _ = harness
        client = TestClient(create_app(service))
        for cid in list(queue_ids(client))[:2]:
            client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
            client.post(
                f"/queue/{cid}/refine",
                json={"expert_id": "e1", "refined_text": ideal_text_for(service, cid)},
            )
        body = client.get("/stats").json()
        assert body["queue_depth"] == 3
        assert body["refinements_per_expert"] == {"e1": 2}
        assert body["refinement_count"] == 2

    def test_state_survives_restart(self, harness, tmp_path):
        service, _, _ = harness
        client = TestClient(create_app(service))
        cid = queue_ids(client)[0]
        client.post(f"/queue/{cid}/claim", json={"expert_id": "e1"})
        client.post(
            f"/queue/{cid}/refine",
            json={"expert_id": "e1", "refined_text": ideal_text_for(service, cid)},
        )
        reopened = ReviewStore(service.store.data_dir, snapshot_interval=50)
        assert reopened.state.to_dict() == service.store.state.to_dict()
        assert len(reopened.state.entries) == 4
