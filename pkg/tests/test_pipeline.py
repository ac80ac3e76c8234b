"""Stage behavior on fixture streams: triggers, validation, guards, variants."""

from __future__ import annotations

import json

import pytest

from corpusgen import build_fixture_corpus, build_quiet_corpus, fixture_context
from tempo.config import PipelineConfig
from tempo.clock import SimulatedClock, from_iso
from tempo.errors import DeferralError
from tempo.gateway import ModelGateway, ProviderBinding
from tempo.graph import FlagKind, NodeStatus, Tier, check_invariants
from tempo.mocks import FixtureRulebook
from tempo.pipeline import SchedulerState, maybe_trigger_segmentation, maybe_trigger_synthesis
from tempo.pipeline.stages import segmentation_check
from tempo.workspace import simulated_workspace

MINUTE = 60_000
HOUR = 3_600_000


def make_workspace(tmp_path, rulebook=None, variant="full", config=None, with_context=True):
    config = config or PipelineConfig()
    binding = ProviderBinding(kind="mock", rulebook=rulebook or FixtureRulebook())
    ws = simulated_workspace(tmp_path / f"ws-{variant}", config, binding, variant=variant)
    if with_context:
        ws.save_context(fixture_context())
    return ws


def run_fixture(ws):
    ws.pipeline.run_stream(build_fixture_corpus())
    return ws


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    """One shared full-pipeline run for read-only assertions."""
    ws = make_workspace(tmp_path_factory.mktemp("shared"))
    return run_fixture(ws)


# ---------------------------------------------------------------------------
# Scheduler rules
# ---------------------------------------------------------------------------

def test_segmentation_fires_at_batch_size():
    config = PipelineConfig()
    state = SchedulerState(op_buffer=[f"operation-{i}" for i in range(20)], last_op_at=0)
    batch, reason = maybe_trigger_segmentation(state, now=1, config=config)
    assert len(batch) == 20 and reason == "batch_full"
    assert state.op_buffer == []


def test_segmentation_fires_on_inactivity():
    config = PipelineConfig()
    state = SchedulerState(op_buffer=["operation-1", "operation-2", "operation-3"],
                           last_op_at=0)
    assert maybe_trigger_segmentation(state, now=11 * MINUTE, config=config)[1] == "inactivity"


def test_segmentation_holds_below_both_thresholds():
    config = PipelineConfig()
    state = SchedulerState(op_buffer=[f"operation-{i}" for i in range(19)], last_op_at=0)
    assert maybe_trigger_segmentation(state, now=5 * MINUTE, config=config) is None


def test_synthesis_warmup_blocks_until_first_batch():
    config = PipelineConfig()
    state = SchedulerState(batches_completed=0, activities_dirty=True, last_synthesis_at=0)
    assert maybe_trigger_synthesis(state, now=HOUR, config=config) is False


def test_synthesis_ceiling_fires_even_without_changes():
    config = PipelineConfig()
    state = SchedulerState(batches_completed=2, activities_dirty=False, last_synthesis_at=0)
    assert maybe_trigger_synthesis(state, now=25 * HOUR, config=config) is True


def test_synthesis_fires_after_warmup_with_dirty_activities():
    config = PipelineConfig()
    state = SchedulerState(batches_completed=1, activities_dirty=True, last_synthesis_at=0)
    assert maybe_trigger_synthesis(state, now=HOUR, config=config) is True


def test_quiet_corpus_fires_ceiling_exactly_once(tmp_path):
    ws = make_workspace(tmp_path)
    ws.pipeline.run_stream(build_quiet_corpus())
    ceiling_events = [e for e in ws.events.of_kind("synthesis_triggered")
                      if e.detail["reason"] == "ceiling"]
    assert len(ceiling_events) == 1
    # and never before the warmup batch completed
    for event in ws.events.of_kind("synthesis_triggered"):
        assert event.detail["batches_completed"] >= 1 or event.detail["reason"] == "ceiling"


# ---------------------------------------------------------------------------
# Stage examples driven by canned rulebooks
# ---------------------------------------------------------------------------

def test_operation_extraction_example(tmp_path):
    ws = make_workspace(tmp_path)
    gateway = ws.pipeline.gateway
    record = gateway.complete("extract_operations", {
        "observation_text": "# t\n- browsing YouTube search results for classical music",
        "user_context": "",
    })
    assert record["operations"][0]["text"] == "browsing YouTube search results for classical music"
    assert record["operations"][0]["tool_kind"] == "browser"


def test_empty_transcription_yields_zero_operations(tmp_path):
    ws = make_workspace(tmp_path)
    record = ws.pipeline.gateway.complete("extract_operations", {
        "observation_text": "# Screen transcription\n(screen dimmed, no activity)",
        "user_context": "",
    })
    assert record["operations"] == []


def test_football_conversation_segments_into_one_action(tmp_path):
    # three operations spanning three applications share one intent
    def rulebook(template_id, inputs):
        if template_id == "segment_actions":
            return {"actions": [{
                "start": 1, "end": 3,
                "label": "Following up on a football conversation by researching Gareth Bale's career",
                "reasoning": "shared intent across applications",
                "confidence": 8, "object_label": "football follow-up",
                "outcome_type": "learn_explore", "domain": "personal_life",
                "community": "family_friends", "engagement_state": "sustained_focus",
                "cognitive_mode": "knowledge_based", "initiation": "externally_triggered",
                "social_mode": "async",
            }]}
        return FixtureRulebook()(template_id, inputs)

    ws = make_workspace(tmp_path, rulebook=rulebook)
    pipeline = ws.pipeline
    texts = [
        "messaging a friend about a football game on iMessage",
        "searching for Gareth Bale retirement on Google",
        "reading a biography of Gareth Bale on Wikipedia",
    ]
    from tempo.ingest import Frame, Observation
    t0 = from_iso("2026-03-02T09:00:00Z")
    for i, text in enumerate(texts):
        obs = Observation(id=f"obs-{i}", frames=[Frame(id=f"f{i}", captured_at=t0 + i * MINUTE,
                                                       source_app="x", ocr_text=text)],
                          transcription=f"# t\n- {text}", summary="-")
        pipeline.process_observation(obs)
    batch = pipeline.state.op_buffer
    assert len(batch) == 3
    pipeline.state.op_buffer = []
    action_ids = pipeline.segment_actions(batch, "batch-test")
    assert len(action_ids) == 1
    action = ws.store.node(action_ids[0])
    assert action.label == "Following up on a football conversation by researching Gareth Bale's career"
    assert [c.id for c in ws.store.children(action.id)] == batch


def test_single_operation_batch_yields_single_action():
    check = segmentation_check(1)
    with pytest.raises(Exception):
        check({"actions": [{"start": 1, "end": 2}]})
    check({"actions": [{"start": 1, "end": 1}]})  # only valid cover


def test_overlapping_segmentation_rejected_then_deferred(tmp_path):
    def rulebook(template_id, inputs):
        if template_id == "segment_actions":
            seg = {"label": "x", "reasoning": "", "confidence": 5, "object_label": "",
                   "outcome_type": "other", "domain": "other", "community": "none",
                   "engagement_state": "idle", "cognitive_mode": "skill_based",
                   "initiation": "self_initiated", "social_mode": "solo"}
            return {"actions": [{**seg, "start": 1, "end": 3}, {**seg, "start": 3, "end": 5}]}
        return FixtureRulebook()(template_id, inputs)

    ws = make_workspace(tmp_path, rulebook=rulebook)
    with pytest.raises(DeferralError):
        ws.pipeline.gateway.complete("segment_actions", {
            "operations": json.dumps([{"index": i, "id": f"operation-{i}", "text": "t"}
                                      for i in range(1, 6)]),
        }, extra_check=segmentation_check(5))


def test_homesickness_activity_covers_four_apps(fixture_run):
    ws = fixture_run
    activity = next(a for a in ws.store.live_nodes(Tier.ACTIVITY)
                    if a.label.startswith("Managing homesickness"))
    ops = set()
    for action in ws.store.children(activity.id):
        for op in ws.store.children(action.id):
            ops.add(op.label)
    apps = {"YouTube", "DoorDash", "Chrome", "iMessage"}
    matched = {app for app in apps for op in ops if app.lower() in op.lower()}
    assert "YouTube".lower() in " ".join(ops).lower()
    assert "DoorDash".lower() in " ".join(ops).lower()


def test_striving_example_covers_both_activities(fixture_run):
    ws = fixture_run
    striving = next(s for s in ws.store.live_nodes(Tier.STRIVING)
                    if s.label.startswith("Dedicated to preserving cultural identity"))
    child_labels = {c.label for c in ws.store.children(striving.id)}
    assert any(l.startswith("Managing homesickness") for l in child_labels)
    assert any(l.startswith("Researching family health") for l in child_labels)


def test_coverage_violation_triggers_repair(tmp_path):
    calls = {"n": 0}

    def rulebook(template_id, inputs):
        if template_id == "propose_activities":
            calls["n"] += 1
            record = FixtureRulebook()(template_id, inputs)
            if calls["n"] == 1 and record["candidates"]:
                record["candidates"][0]["action_ids"] = record["candidates"][0]["action_ids"][:0]
                record["candidates"][0]["action_valences"] = []
                record["candidates"] = record["candidates"][:1]
            return record
        return FixtureRulebook()(template_id, inputs)

    ws = make_workspace(tmp_path, rulebook=rulebook)
    run_fixture(ws)
    assert calls["n"] > 1  # the first, non-covering proposal was re-asked
    assert not check_invariants(ws.store)


def test_revise_on_user_edited_activity_logs_downgrade(tmp_path):
    ws = make_workspace(tmp_path)
    run_fixture(ws)
    activity = ws.store.live_nodes(Tier.ACTIVITY)[0]
    ws.edit_engine.inline_edit(activity.id, "my activity, my words")

    def revising(template_id, inputs):
        record = FixtureRulebook()(template_id, inputs)
        if template_id == "reconcile_activities" and record["decisions"]:
            record["decisions"][0] = {
                "candidate_index": record["decisions"][0]["candidate_index"],
                "decision": "revise",
                "targets": [activity.id],
                "label": "stale relabel attempt",
                "reasoning": "model thinks it knows better",
            }
        return record

    from tempo.gateway import ModelGateway, ProviderBinding
    ws.pipeline.gateway = ModelGateway(ProviderBinding(kind="mock", rulebook=revising),
                                       max_retries=ws.config.max_retries)
    ws.pipeline.drain_retriggers()
    from tempo.pipeline.records import ActivityCandidate
    candidate = ActivityCandidate(description="whatever sphere", action_ids=[], action_valences=[])
    outcome = ws.pipeline.reconcile_activities([candidate], "batch-t")
    assert outcome.applied_decisions[0]["relabel_outcome"] == "dropped"
    assert ws.store.node(activity.id).label == "my activity, my words"


def test_synthesis_check_enforces_accounting_and_references():
    from tempo.errors import SchemaError
    from tempo.pipeline.stages import synthesis_check

    check = synthesis_check({"striving-1"}, {"activity-1"})
    record = {"strivings": [], "dropped_goals": []}
    with pytest.raises(SchemaError, match="missing"):
        check(record)  # striving-1 unaccounted
    with pytest.raises(SchemaError, match="unknown activities"):
        check({"strivings": [{"goal_id": "striving-1", "activity_ids": ["activity-9"]}],
               "dropped_goals": []})
    with pytest.raises(SchemaError, match="does not reference"):
        check({"strivings": [{"goal_id": "striving-7", "activity_ids": []}],
               "dropped_goals": [{"goal_id": "striving-1", "reason": "x"}]})
    coverage = synthesis_check({"striving-1"}, {"activity-1"}, require_coverage_of={"activity-1"})
    with pytest.raises(SchemaError, match="unassigned"):
        coverage({"strivings": [{"goal_id": "striving-1", "activity_ids": []}],
                  "dropped_goals": []})
    coverage({"strivings": [{"goal_id": "striving-1", "activity_ids": ["activity-1"]}],
              "dropped_goals": []})  # satisfied


# ---------------------------------------------------------------------------
# Activity stabilization and accounting
# ---------------------------------------------------------------------------

def test_activities_stabilize_after_two_batches(fixture_run):
    ws = fixture_run
    stable = [a for a in ws.store.live_nodes(Tier.ACTIVITY) if a.status == NodeStatus.STABLE]
    assert stable
    for activity in stable:
        assert len(activity.metadata.batch_ids) >= 2


def test_every_synthesis_accounts_for_previous_strivings(fixture_run):
    ws = fixture_run
    applied = ws.events.of_kind("synthesis_applied")
    assert applied
    for event in applied:
        previous = set(event.detail["previous"])
        surviving = set(event.detail["surviving"])
        dropped = set(event.detail["dropped"])
        assert previous == surviving | dropped


def test_stable_activities_always_have_striving_parent_after_refine(fixture_run):
    ws = fixture_run
    for activity in ws.store.live_nodes(Tier.ACTIVITY):
        if activity.status == NodeStatus.STABLE:
            assert ws.store.parents(activity.id), f"{activity.id} has no striving parent"


# ---------------------------------------------------------------------------
# Privacy integration
# ---------------------------------------------------------------------------

def test_banking_page_is_quarantined_and_never_prompted(tmp_path):
    ws = make_workspace(tmp_path)
    from tempo.ingest import Frame, Observation
    t0 = from_iso("2026-03-02T09:00:00Z")
    banking = Observation(id="obs-bank", frames=[
        Frame(id="fb", captured_at=t0, source_app="Chrome",
              source_url="https://mybank.example/login",
              ocr_text="bank of nowhere login enter account password")],
        transcription="# t\n- bank of nowhere login enter account password", summary="-")
    ws.pipeline.process_observation(banking)
    decision = ws.audit_guard.decisions[-1]
    assert decision.transmit_data is False
    assert decision.data_type == "banking_credentials"
    assert (ws.dir / "quarantine" / "obs-bank.json").exists()
    # the observation reached the audit prompt but no induction prompt
    for request in ws.pipeline.gateway.requests:
        assert "bank of nowhere" not in request.rendered
    assert "obs-bank" not in ws.obs_store.observations


def test_failing_audit_gateway_blocks_all_induction(tmp_path):
    def broken(template_id, inputs):
        raise LookupError("audit model offline")

    config = PipelineConfig()
    binding = ProviderBinding(kind="mock", rulebook=broken)
    ws = simulated_workspace(tmp_path / "broken", config, binding)
    ws.pipeline.run_stream(build_fixture_corpus())
    assert len(ws.store.live_nodes(Tier.OPERATION)) == 0
    assert len(ws.obs_store.observations) == 0
    assert len(ws.audit_guard.deferred_observations()) > 0


# ---------------------------------------------------------------------------
# Ablation structure
# ---------------------------------------------------------------------------

def test_no_hierarchy_strivings_have_no_descendants(tmp_path):
    ws = make_workspace(tmp_path, variant="no_hierarchy")
    ws.pipeline.run_stream(build_fixture_corpus())
    strivings = ws.store.live_nodes(Tier.STRIVING)
    assert strivings
    assert not ws.store.live_nodes(Tier.ACTION)
    assert not ws.store.live_nodes(Tier.ACTIVITY)
    for striving in strivings:
        assert not ws.store.children(striving.id)
        assert striving.evidence  # direct observation links
        assert all(ref.startswith("obs-") for ref in striving.evidence)


def test_no_context_blanks_user_context_in_every_prompt(tmp_path):
    ws = make_workspace(tmp_path, variant="no_context")
    ws.pipeline.run_stream(build_fixture_corpus())
    marker = "PhD student living far from home"
    for request in ws.pipeline.gateway.requests:
        assert marker not in request.rendered
    rendered = ws.pipeline.gateway.render("synthesize_strivings",
                                          {"activities": "[]", "user_context": marker})
    assert marker not in rendered
    assert rendered.rstrip().endswith("User context:")


def test_variants_striving_count_ordering(tmp_path):
    counts = {}
    for variant in ("full", "no_context", "no_hierarchy"):
        ws = make_workspace(tmp_path, variant=variant)
        ws.pipeline.run_stream(build_fixture_corpus())
        counts[variant] = len(ws.store.live_nodes(Tier.STRIVING))
    assert counts["full"] <= counts["no_context"] <= counts["no_hierarchy"]


# ---------------------------------------------------------------------------
# Edit feedback loop through the pipeline
# ---------------------------------------------------------------------------

def test_removed_striving_orphans_reparented_after_retrigger(tmp_path):
    ws = run_fixture(make_workspace(tmp_path))
    target = next(s for s in ws.store.live_nodes(Tier.STRIVING)
                  if s.label.startswith("Establishing themselves"))
    orphan_ids = [c.id for c in ws.store.children(target.id)]
    assert orphan_ids
    ws.edit_engine.remove(target.id)
    ws.pipeline.drain_retriggers()
    for orphan_id in orphan_ids:
        node = ws.store.node(orphan_id)
        assert node.removed or ws.store.parents(orphan_id), f"{orphan_id} left orphaned"
    assert not check_invariants(ws.store)


def test_user_edited_label_survives_subsequent_cycles(tmp_path):
    ws = run_fixture(make_workspace(tmp_path))
    striving = ws.store.live_nodes(Tier.STRIVING)[0]
    ws.edit_engine.inline_edit(striving.id, "my words, not yours")
    ws.pipeline.drain_retriggers()
    for _ in range(3):
        ws.pipeline.run_forced()
    assert ws.store.node(striving.id).label == "my words, not yours"
    assert not check_invariants(ws.store)
