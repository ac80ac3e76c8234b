"""API contract: hierarchy, evidence, edits over the wire, settings, runs."""

from __future__ import annotations

import time

import pytest
from fastapi.testclient import TestClient

from corpusgen import build_fixture_corpus, fixture_context
from tempo.config import PipelineConfig
from tempo.gateway import ProviderBinding
from tempo.graph import Tier, canonical_export
from tempo.mocks import FixtureRulebook
from tempo.pipeline.records import QUESTION_IDS
from tempo.service import create_app
from tempo.workspace import simulated_workspace


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    ws = simulated_workspace(tmp_path_factory.mktemp("svc"), PipelineConfig(),
                             ProviderBinding(kind="mock", rulebook=FixtureRulebook()))
    ws.save_context(fixture_context())
    ws.pipeline.run_stream(build_fixture_corpus())
    client = TestClient(create_app(ws))
    return ws, client


@pytest.fixture
def fresh_service(tmp_path):
    ws = simulated_workspace(tmp_path / "svc", PipelineConfig(),
                             ProviderBinding(kind="mock", rulebook=FixtureRulebook()))
    ws.save_context(fixture_context())
    ws.pipeline.run_stream(build_fixture_corpus())
    return ws, TestClient(create_app(ws))


# ---------------------------------------------------------------------------
# hierarchy
# ---------------------------------------------------------------------------

def test_empty_store_yields_empty_hierarchy(tmp_path):
    ws = simulated_workspace(tmp_path / "e", PipelineConfig(),
                             ProviderBinding(kind="mock", rulebook=FixtureRulebook()))
    client = TestClient(create_app(ws))
    body = client.get("/v1/hierarchy").json()
    assert body == {"strivings": [], "unassigned_activities": []}


def test_hierarchy_matches_canonical_export(service):
    ws, client = service
    body = client.get("/v1/hierarchy").json()
    export = canonical_export(ws.store, confidence_threshold=ws.config.confidence_threshold)
    export_by_tier = {}
    for node in export["nodes"]:
        export_by_tier.setdefault(node["tier"], set()).add(node["id"])
    doc_strivings = {s["id"] for s in body["strivings"]}
    assert doc_strivings == export_by_tier.get("striving", set())
    doc_activities = {a["id"] for s in body["strivings"] for a in s["children"]}
    doc_activities |= {a["id"] for a in body["unassigned_activities"]}
    assert doc_activities == export_by_tier.get("activity", set())
    # labels agree with the export byte-for-byte
    labels = {n["id"]: n["label"] for n in export["nodes"]}
    for striving in body["strivings"]:
        assert striving["label"] == labels[striving["id"]]


def test_min_confidence_filter_annotates_but_keeps(service):
    ws, client = service
    body = client.get("/v1/hierarchy", params={"min_confidence": 10}).json()
    assert body["strivings"]  # still present
    assert all(s["low_confidence"] for s in body["strivings"])
    body = client.get("/v1/hierarchy", params={"min_confidence": 1}).json()
    assert all(not s["low_confidence"] for s in body["strivings"])


# ---------------------------------------------------------------------------
# evidence
# ---------------------------------------------------------------------------

def test_operation_evidence_lists_its_frames(service):
    ws, client = service
    op = ws.store.live_nodes(Tier.OPERATION)[0]
    body = client.get(f"/v1/nodes/{op.id}/evidence").json()
    assert body["total"] == len(op.evidence)
    assert [item["id"] for item in body["items"]] == sorted(
        op.evidence, key=lambda f: ws.obs_store.frame(f).captured_at)


def test_striving_evidence_is_transitive_union(service):
    ws, client = service
    striving = ws.store.live_nodes(Tier.STRIVING)[0]
    body = client.get(f"/v1/nodes/{striving.id}/evidence", params={"page_size": 10_000}).json()
    # oracle: walk parent_child closure collecting operation frames
    expected = set()
    stack = [striving.id]
    seen = set()
    while stack:
        node_id = stack.pop()
        if node_id in seen:
            continue
        seen.add(node_id)
        node = ws.store.node(node_id)
        expected.update(ref for ref in node.evidence if ws.obs_store.has_frame(ref))
        stack.extend(c.id for c in ws.store.children(node_id))
    assert {item["id"] for item in body["items"]} == expected
    assert body["total"] == len(expected)  # deduplicated


def test_evidence_pagination_is_stable(service):
    ws, client = service
    striving = ws.store.live_nodes(Tier.STRIVING)[0]
    one = client.get(f"/v1/nodes/{striving.id}/evidence", params={"page": 1, "page_size": 3}).json()
    two = client.get(f"/v1/nodes/{striving.id}/evidence", params={"page": 2, "page_size": 3}).json()
    assert len(one["items"]) == 3
    assert not {i["id"] for i in one["items"]} & {i["id"] for i in two["items"]}


def test_removed_node_evidence_404s(fresh_service):
    ws, client = fresh_service
    striving = ws.store.live_nodes(Tier.STRIVING)[0]
    ws.edit_engine.remove(striving.id)
    response = client.get(f"/v1/nodes/{striving.id}/evidence")
    assert response.status_code == 404
    assert response.json()["code"] == "not_found"


# ---------------------------------------------------------------------------
# edits over the wire
# ---------------------------------------------------------------------------

def test_post_inline_edit_returns_refreshed_subtree(fresh_service):
    ws, client = fresh_service
    striving = ws.store.live_nodes(Tier.STRIVING)[0]
    response = client.post("/v1/edits", json={
        "kind": "inline_edit", "node_id": striving.id, "new_label": "my own phrasing",
    })
    assert response.status_code == 200
    body = response.json()
    assert body["subtree"]["label"] == "my own phrasing"
    assert "user_edited" in body["subtree"]["flags"]
    assert body["retriggers"] == ["synthesize", "refine"]
    # read-your-writes
    hierarchy = client.get("/v1/hierarchy").json()
    assert any(s["label"] == "my own phrasing" for s in hierarchy["strivings"])


def test_post_edit_tier_violation_code(fresh_service):
    ws, client = fresh_service
    op = ws.store.live_nodes(Tier.OPERATION)[0]
    response = client.post("/v1/edits", json={
        "kind": "inline_edit", "node_id": op.id, "new_label": "nope",
    })
    assert response.status_code == 422
    assert response.json()["code"] == "tier_violation"


def test_post_edit_merge_mixed_tiers_rejected(fresh_service):
    ws, client = fresh_service
    striving = ws.store.live_nodes(Tier.STRIVING)[0]
    activity = ws.store.live_nodes(Tier.ACTIVITY)[0]
    response = client.post("/v1/edits", json={"kind": "merge",
                                              "node_ids": [striving.id, activity.id]})
    assert response.status_code == 422
    assert response.json()["code"] == "tier_violation"


def test_post_edit_unknown_node_404(fresh_service):
    _, client = fresh_service
    response = client.post("/v1/edits", json={
        "kind": "inline_edit", "node_id": "striving-404", "new_label": "x"})
    assert response.status_code == 404


def test_parse_edit_endpoint_clarifies(fresh_service):
    _, client = fresh_service
    response = client.post("/v1/edits/parse", json={"text": "do something good"})
    assert response.status_code == 400
    assert "clarification" in response.json()["detail"]


def test_delete_evidence_decrements_counts(fresh_service):
    ws, client = fresh_service
    op = ws.store.live_nodes(Tier.OPERATION)[0]
    before = client.get(f"/v1/nodes/{op.id}").json()["evidence_count"]
    frame_id = op.evidence[0]
    response = client.request("DELETE", f"/v1/evidence/{frame_id}")
    assert response.status_code == 200
    after = client.get(f"/v1/nodes/{op.id}").json()["evidence_count"]
    assert after == before - 1


# ---------------------------------------------------------------------------
# settings + context
# ---------------------------------------------------------------------------

def test_settings_round_trip_and_validation(fresh_service):
    ws, client = fresh_service
    response = client.put("/v1/settings", json={
        "paused": True, "excluded_apps": ["1Password"],
        "excluded_url_patterns": ["*.bank.com"], "sampling_interval_s": 7})
    assert response.status_code == 200
    assert client.get("/v1/settings").json()["paused"] is True
    bad = client.put("/v1/settings", json={"sampling_interval_s": 0})
    assert bad.status_code == 400
    assert bad.json()["code"] == "invalid_payload"


def test_context_requires_twelve_slots(fresh_service):
    _, client = fresh_service
    answers = {qid: "" for qid in QUESTION_IDS}
    assert client.put("/v1/context", json={"answers": answers}).status_code == 200
    eleven = dict(answers)
    eleven.pop("q12")
    response = client.put("/v1/context", json={"answers": eleven})
    assert response.status_code == 400
    assert response.json()["code"] == "invalid_payload"


# ---------------------------------------------------------------------------
# pipeline runs + events
# ---------------------------------------------------------------------------

def test_pipeline_run_and_event_suffix(fresh_service):
    ws, client = fresh_service
    seq_before = ws.events.events[-1].seq
    response = client.post("/v1/pipeline/run", json={})
    assert response.status_code == 200
    run_id = response.json()["run_id"]
    assert run_id.startswith("run-")
    deadline = time.time() + 10
    while time.time() < deadline:
        body = client.get("/v1/pipeline/events", params={"since": seq_before}).json()
        if not body["busy"] and body["events"]:
            break
        time.sleep(0.01)
    kinds = [e["kind"] for e in body["events"]]
    assert "synthesis_applied" in kinds
    assert all(e["seq"] > seq_before for e in body["events"])


def test_pipeline_busy_conflict(fresh_service):
    ws, client = fresh_service
    # launch a run and immediately race a second request against the worker lock
    first = client.post("/v1/pipeline/run", json={})
    assert first.status_code == 200
    second = client.post("/v1/pipeline/run", json={})
    # either the first finished already (tiny mock run) or we get pipeline_busy
    assert second.status_code in (200, 409)
    if second.status_code == 409:
        assert second.json()["code"] == "pipeline_busy"
    deadline = time.time() + 10
    while time.time() < deadline:
        if not client.get("/v1/pipeline/events").json()["busy"]:
            break
        time.sleep(0.01)


def test_unknown_stage_rejected(fresh_service):
    _, client = fresh_service
    response = client.post("/v1/pipeline/run", json={"stage": "transmogrify"})
    assert response.status_code == 400


def test_static_ui_mount_serves_page_and_api(tmp_path):
    ws = simulated_workspace(tmp_path / "ui", PipelineConfig(),
                             ProviderBinding(kind="mock", rulebook=FixtureRulebook()))
    ui_dir = tmp_path / "built"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<!doctype html><div id='app'></div>", encoding="utf-8")
    client = TestClient(create_app(ws, ui_dir=str(ui_dir)))
    page = client.get("/")
    assert page.status_code == 200 and "id='app'" in page.text
    assert client.get("/v1/hierarchy").status_code == 200  # API still routed


# ---------------------------------------------------------------------------
# review sessions over the wire
# ---------------------------------------------------------------------------

def test_review_session_summarizes_edits_and_screenshot_removals(fresh_service):
    ws, client = fresh_service
    assert client.post("/v1/sessions/start").status_code == 200
    striving = ws.store.live_nodes(Tier.STRIVING)[-1]
    client.post("/v1/edits", json={"kind": "remove", "node_id": striving.id})
    op = ws.store.live_nodes(Tier.OPERATION)[0]
    frame_id = op.evidence[0]
    client.request("DELETE", f"/v1/evidence/{frame_id}")
    body = client.post("/v1/sessions/end").json()
    assert "remove: 1 edit(s)" in body["summary"]
    # one screenshot, counted per node whose evidence lost it
    assert "screenshots removed:" in body["summary"]
    assert f"{op.id} (1)" in body["summary"]
    # ending twice is an error
    assert client.post("/v1/sessions/end").status_code == 400
