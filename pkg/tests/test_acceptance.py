"""Acceptance criteria, one test per criterion, all on the deterministic mock.

Each test prints an ACCEPTANCE <name>: PASS/FAIL line (conftest hook).
Tolerances and budgets are pinned here, not deferred anywhere.
"""

from __future__ import annotations

import json
import os
import random
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from corpusgen import (
    build_fixture_corpus,
    build_privacy_corpus,
    build_quiet_corpus,
    fixture_context,
)
from test_temporal import oracle_edges
from tempo.cli import main as cli_main
from tempo.config import PipelineConfig
from tempo.clock import from_iso
from tempo.edits import RETRIGGERS
from tempo.errors import DeferralError
from tempo.gateway import ModelGateway, ProviderBinding
from tempo.graph import (
    Actor,
    FlagKind,
    GraphStore,
    Mutation,
    MutationKind,
    NodeStatus,
    Tier,
    VerdictOutcome,
    canonical_export_bytes,
    check_invariants,
)
from tempo.ingest import Frame, Observation, write_corpus
from tempo.mocks import AdversarialRulebook, FixtureRulebook, FuzzSegmentationRulebook
from tempo.pipeline.stages import apply_segmentation, segmentation_check
from tempo.pipeline.temporal import Interval
from tempo.workspace import simulated_workspace

FIXTURE = Path(__file__).parent / "fixtures" / "corpus_40.jsonl"
MINUTE = 60_000
HOUR = 3_600_000


def make_workspace(root: Path, rulebook=None, variant="full", name="ws"):
    ws = simulated_workspace(root / name, PipelineConfig(),
                             ProviderBinding(kind="mock", rulebook=rulebook or FixtureRulebook()),
                             variant=variant)
    ws.save_context(fixture_context())
    return ws


def run_cli(*args) -> "click.testing.Result":
    return CliRunner().invoke(cli_main, [str(a) for a in args])


@pytest.fixture(scope="module")
def context_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("ctx") / "context.json"
    path.write_text(json.dumps({"answers": fixture_context().answers}), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    ws = make_workspace(tmp_path_factory.mktemp("shared"))
    ws.pipeline.run_stream(build_fixture_corpus())
    return ws


# ---------------------------------------------------------------------------
# 1. Determinism: replay twice -> byte-identical export + event log, < 30 s
# ---------------------------------------------------------------------------

def test_determinism_replay_twice_byte_identical(tmp_path, context_file):
    started = time.monotonic()
    for name in ("one", "two"):
        result = run_cli("replay", "--corpus", FIXTURE, "--out", tmp_path / name,
                         "--context", context_file, "--provider", "mock",
                         "--mock-rules", "fixture")
        assert result.exit_code == 0, result.output
    elapsed = time.monotonic() - started
    export_one = (tmp_path / "one" / "export.json").read_bytes()
    export_two = (tmp_path / "two" / "export.json").read_bytes()
    assert export_one == export_two
    assert (tmp_path / "one" / "events.log").read_bytes() == \
        (tmp_path / "two" / "events.log").read_bytes()
    assert elapsed < 30.0, f"two replays took {elapsed:.1f}s (budget 30s)"


# ---------------------------------------------------------------------------
# 2. Temporal-edge oracle: 200/200 randomized instances, < 10 s
# ---------------------------------------------------------------------------

def test_temporal_edges_match_oracle_on_200_instances():
    from tempo.pipeline.temporal import compute_temporal_edges

    rng = random.Random(0xACCE97)
    started = time.monotonic()
    matched = 0
    for _ in range(200):
        n_new = rng.randint(0, 50)
        n_prior = rng.randint(0, 50)
        span = 72 * HOUR

        def interval(i):
            start = rng.randrange(span)
            return Interval(f"action-{i}", start, start + rng.randrange(4 * HOUR))

        prior = [interval(i) for i in range(1, n_prior + 1)]
        new = [interval(i) for i in range(n_prior + 1, n_prior + n_new + 1)]
        lookback = rng.choice([HOUR, 24 * HOUR])
        got = compute_temporal_edges(new, prior, lookback)
        assert (got.follows, got.co_occurs, got.overlaps) == oracle_edges(new, prior, lookback)
        matched += 1
    elapsed = time.monotonic() - started
    assert matched == 200
    assert elapsed < 10.0, f"200 instances took {elapsed:.1f}s (budget 10s)"


# ---------------------------------------------------------------------------
# 3. Segmentation soundness: 500 fuzzed segmentations, invalid rejected pre-write
# ---------------------------------------------------------------------------

def _partition_violation(segments: list[dict], n: int) -> str | None:
    """Independent partition checker over raw (start, end) pairs."""
    spans = sorted((s["start"], s["end"]) for s in segments)
    if not spans or spans[0][0] != 1:
        return "non_covering"
    cursor = 0
    for start, end in spans:
        if start <= cursor:
            return "overlapping"
        if start != cursor + 1:
            return "gapped"
        cursor = end
    if cursor != n:
        return "non_covering"
    return None


def test_segmentation_soundness_under_fuzz(tmp_path):
    responses: list[tuple[int, dict]] = []
    fuzz = FuzzSegmentationRulebook(seed=7)

    def recording(template_id, inputs):
        record = fuzz(template_id, inputs)
        if template_id == "segment_actions":
            n = len(json.loads(str(inputs["operations"])))
            responses.append((n, record))
        return record

    gateway = ModelGateway(ProviderBinding(kind="mock", rulebook=recording), max_retries=2)
    store = GraphStore(tmp_path / "graph.log")
    rng = random.Random(99)
    stored_batches: list[tuple[list[str], list[str]]] = []

    batch_counter = 0
    while len(responses) < 500:
        batch_counter += 1
        n = rng.randint(1, 12)
        op_ids = []
        for i in range(n):
            verdict = store.submit(MutationKind.CREATE_NODE, {
                "tier": "operation",
                "label": f"fuzz op {batch_counter}-{i} nonce {rng.randrange(10**9)}",
                "time_range": [i * 1000, i * 1000 + 500],
            }, actor=Actor.PIPELINE, cause="fuzz", ts=0)
            op_ids.append(verdict.affected[0])
        operations_json = json.dumps([
            {"index": i + 1, "id": op_id, "text": store.node(op_id).label}
            for i, op_id in enumerate(op_ids)
        ])
        try:
            record = gateway.complete("segment_actions", {"operations": operations_json},
                                      extra_check=segmentation_check(n))
        except DeferralError:
            continue
        action_ids = apply_segmentation(store, record, op_ids, "fuzz", 0)
        stored_batches.append((op_ids, action_ids))

    # the fuzzer produced all three violation categories across >= 500 responses
    categories = {_partition_violation(r["actions"], n) for n, r in responses}
    assert {"overlapping", "gapped", "non_covering"} <= categories
    invalid = [(n, r) for n, r in responses if _partition_violation(r["actions"], n)]
    assert len(responses) >= 500 and invalid

    # every invalid segmentation was rejected pre-write: each stored batch's
    # actions partition their batch exactly
    for op_ids, action_ids in stored_batches:
        covered: list[str] = []
        for action_id in action_ids:
            children = [c.id for c in store.children(action_id)]
            assert children, f"{action_id} has no operations"
            covered.extend(children)
        assert sorted(covered) == sorted(op_ids), "stored segmentation is not a partition"
        positions = sorted(op_ids.index(op) for op in covered)
        assert positions == list(range(len(op_ids)))
    assert not check_invariants(store)
    store.close()


# ---------------------------------------------------------------------------
# 4. Guard suite: 100 adversarial cycles, zero violations
# ---------------------------------------------------------------------------

def test_guard_suite_100_adversarial_cycles(tmp_path):
    ws = make_workspace(tmp_path, name="guards")
    ws.pipeline.run_stream(build_fixture_corpus())
    engine = ws.edit_engine
    store = ws.store

    strivings = store.live_nodes(Tier.STRIVING)
    heritage = next(s for s in strivings if s.label.startswith("Dedicated to preserving"))
    research = next(s for s in strivings if s.label.startswith("Establishing themselves"))
    football = next(s for s in strivings if s.label.startswith("Keeping up friendships"))
    activities = store.live_nodes(Tier.ACTIVITY)
    reassigned_activity = next(a for a in activities if a.label.startswith("Researching family health"))
    locked_activity = next(a for a in activities if a.label.startswith("Managing homesickness"))

    engine.inline_edit(heritage.id, "staying rooted while far from home")
    engine.lock(research.id)
    engine.endorse(research.id)
    rejected_label = football.label
    engine.reject(football.id)
    engine.reassign(reassigned_activity.id, heritage.id, justification="family first")
    engine.lock(locked_activity.id)
    ws.pipeline.drain_retriggers()

    protected_labels = {
        heritage.id: "staying rooted while far from home",
        research.id: research.label,
        locked_activity.id: store.node(locked_activity.id).label,
    }
    protected_ids = set(protected_labels) | {reassigned_activity.id}
    guard_watermark = len(store.mutations)

    # swap in the hostile provider for the whole induction path
    ws.pipeline.gateway = ModelGateway(
        ProviderBinding(kind="mock", rulebook=AdversarialRulebook(seed=3)),
        max_retries=ws.config.max_retries)

    themes = ["research", "heritage", "family", "admin", "football"]
    base = ws.clock.now() + HOUR
    for cycle in range(100):
        theme_bullet = {
            "research": "running the analysis notebook in Jupyter",
            "heritage": "watching a Nepali folk concert video on YouTube",
            "family": "messaging mom on iMessage about her clinic checkup",
            "admin": "filling out the IRB amendment form in Chrome",
            "football": "checking la liga transfer rumor threads in Chrome",
        }[themes[cycle % len(themes)]]
        at = base + cycle * 5 * MINUTE
        obs = Observation(
            id=f"adv-{cycle}",
            frames=[Frame(id=f"adv-{cycle}-f0", captured_at=at, source_app="Chrome",
                          ocr_text=theme_bullet)],
            transcription=f"# t\n- {theme_bullet}",
            summary="-")
        ws.pipeline.process_observation(obs)
        ws.pipeline.run_forced(None)
        # direct hostile writes against the store's guard chokepoint
        store.submit(MutationKind.MERGE_NODES,
                     {"source_ids": [research.id], "target_id": heritage.id,
                      "label": f"CORRUPTED direct {cycle}"},
                     actor=Actor.PIPELINE, cause=f"direct-{cycle}", ts=at)
        store.submit(MutationKind.RELABEL,
                     {"node_id": heritage.id, "label": f"CORRUPTED direct {cycle}"},
                     actor=Actor.PIPELINE, cause=f"direct-{cycle}", ts=at)
        store.submit(MutationKind.REMOVE_NODE, {"node_id": research.id},
                     actor=Actor.PIPELINE, cause=f"direct-{cycle}", ts=at)

    # zero guard violations across every pipeline mutation of the run
    for mutation, verdict in zip(store.mutations[guard_watermark:],
                                 store.verdicts[guard_watermark:]):
        if mutation.actor != Actor.PIPELINE:
            continue
        payload = mutation.payload
        if mutation.kind == MutationKind.RELABEL and payload["node_id"] in protected_labels:
            assert verdict.outcome == VerdictOutcome.DROPPED, mutation.to_dict()
        if mutation.kind in (MutationKind.REMOVE_NODE, MutationKind.SET_STATUS):
            target = payload["node_id"]
            removingish = mutation.kind == MutationKind.REMOVE_NODE or \
                payload.get("status") == "removed"
            if removingish and target in protected_ids:
                assert verdict.outcome == VerdictOutcome.DROPPED, mutation.to_dict()
        if mutation.kind == MutationKind.MERGE_NODES:
            sources = set(payload["source_ids"])
            if payload.get("target_id") in protected_ids:
                assert verdict.outcome in (VerdictOutcome.DOWNGRADED, VerdictOutcome.DROPPED), \
                    mutation.to_dict()
            if sources & protected_ids:
                assert verdict.outcome in (VerdictOutcome.SKIPPED, VerdictOutcome.DOWNGRADED,
                                           VerdictOutcome.DROPPED), mutation.to_dict()

    # user-edited labels byte-identical; locked nodes present; rejected absent
    for node_id, expected_label in protected_labels.items():
        node = store.node(node_id)
        assert node.label == expected_label
        assert not node.removed
    assert store.node(reassigned_activity.id).has_flag(FlagKind.USER_REASSIGNED)
    # the user-set assignment survives (multi-membership may add parents, never remove this one)
    assert heritage.id in [p.id for p in store.parents(reassigned_activity.id)]
    live_labels = {n.label for n in store.live_nodes(Tier.STRIVING)}
    assert rejected_label not in live_labels
    assert not check_invariants(store)

    # the whole adversarial run replays from its log to the identical state
    ws.store.close()
    replayed = GraphStore.open(ws.dir / "graph.log")
    assert canonical_export_bytes(replayed, include_removed=True) == \
        canonical_export_bytes(store, include_removed=True)
    assert [v.to_dict() for v in replayed.verdicts] == [v.to_dict() for v in store.verdicts]
    replayed.close()


# ---------------------------------------------------------------------------
# 5. Accounting after every synthesis+refine
# ---------------------------------------------------------------------------

def test_accounting_previous_equals_surviving_union_dropped(tmp_path):
    ws = make_workspace(tmp_path, name="accounting")
    synth_counts = []

    for observation in build_fixture_corpus():
        ws.pipeline.process_observation(observation)
        applied = ws.events.of_kind("synthesis_applied")
        if len(applied) > len(synth_counts):
            synth_counts.append(len(applied))
            # store state sits immediately after the latest synthesis+refine
            for activity in ws.store.live_nodes(Tier.ACTIVITY):
                if activity.status == NodeStatus.STABLE:
                    assert ws.store.parents(activity.id), \
                        f"stable {activity.id} without striving parent after synthesis"
    ws.pipeline.flush()

    applied = ws.events.of_kind("synthesis_applied")
    assert applied, "fixture run must synthesize at least once"
    for event in applied:
        previous = set(event.detail["previous"])
        surviving = set(event.detail["surviving"])
        dropped = set(event.detail["dropped"])
        assert previous == surviving | dropped, event.to_dict()
    for activity in ws.store.live_nodes(Tier.ACTIVITY):
        if activity.status == NodeStatus.STABLE:
            assert ws.store.parents(activity.id)


# ---------------------------------------------------------------------------
# 6. Scheduler: warmup before any synthesis; exactly one ceiling fire in 25 h
# ---------------------------------------------------------------------------

def test_scheduler_warmup_and_ceiling(tmp_path):
    ws = make_workspace(tmp_path, name="sched-fixture")
    ws.pipeline.run_stream(build_fixture_corpus())
    for event in ws.events.of_kind("synthesis_triggered"):
        if event.detail["reason"] != "ceiling":
            assert event.detail["batches_completed"] >= 1, event.to_dict()

    quiet = make_workspace(tmp_path, name="sched-quiet")
    quiet.pipeline.run_stream(build_quiet_corpus())
    triggered = quiet.events.of_kind("synthesis_triggered")
    ceiling = [e for e in triggered if e.detail["reason"] == "ceiling"]
    assert len(ceiling) == 1, [e.to_dict() for e in triggered]
    for event in triggered:
        assert event.detail["batches_completed"] >= 1 or event.detail["reason"] == "ceiling"


# ---------------------------------------------------------------------------
# 7. Edit feedback loop: exact retrigger sets; orphans re-parented
# ---------------------------------------------------------------------------

def test_edit_feedback_loop_scripted_session(tmp_path):
    ws = make_workspace(tmp_path, name="editloop")
    ws.pipeline.run_stream(build_fixture_corpus())
    engine = ws.edit_engine
    store = ws.store

    strivings = store.live_nodes(Tier.STRIVING)
    heritage = next(s for s in strivings if s.label.startswith("Dedicated to preserving"))
    research = next(s for s in strivings if s.label.startswith("Establishing themselves"))
    football = next(s for s in strivings if s.label.startswith("Keeping up friendships"))
    football_activity = store.children(football.id)[0]

    engine.start_session()
    e1 = engine.inline_edit(heritage.id, "holding onto home across the distance")
    e2 = engine.reassign(football_activity.id, heritage.id, justification="friends feel like family")
    orphan_ids = [c.id for c in store.children(research.id)]
    assert orphan_ids, "scripted removal needs orphans"
    e3 = engine.remove(research.id)
    e4 = engine.merge([heritage.id, football.id], target_label="a connected life abroad")
    engine.end_session()

    expected = {
        e1.id: ["synthesize", "refine"],
        e2.id: ["synthesize", "refine"],
        e3.id: ["reconcile", "synthesize", "refine"],
        e4.id: ["synthesize", "refine"],
    }
    retrigger_events = {e.detail["edit"]: e.detail["stages"]
                        for e in ws.events.of_kind("edit_retrigger")
                        if e.detail["edit"] in expected}
    assert retrigger_events == expected
    # spec mapping is what the engine reports too
    assert list(engine.retrigger(e3, store)) == ["reconcile", "synthesize", "refine"]

    seq_before = ws.events.events[-1].seq
    ws.pipeline.drain_retriggers()
    after = ws.events.since(seq_before)
    kinds = [e.kind for e in after]
    assert "orphan_reassignment" in kinds
    assert kinds.index("orphan_reassignment") < kinds.index("synthesis_applied"), \
        "reconcile pass must precede the retriggered synthesis"

    for orphan_id in orphan_ids:
        node = store.node(orphan_id)
        folded = node.removed and node.merged_into is not None
        assert folded or store.parents(orphan_id), f"{orphan_id} still orphaned"
    assert not check_invariants(store)


# ---------------------------------------------------------------------------
# 8. Privacy: 10/10 PII frames deleted, 0/20 clean deleted; fail-closed audit
# ---------------------------------------------------------------------------

def test_privacy_pii_deletion_and_fail_closed(tmp_path):
    observations, pii_ids, clean_ids = build_privacy_corpus()
    assert len(pii_ids) == 10 and len(clean_ids) == 20

    ws = make_workspace(tmp_path, name="privacy")
    ws.pipeline.run_stream(observations)

    deleted = {entry["frame"] for event in ws.events.of_kind("privacy_scan")
               for entry in event.detail["deleted"]}
    assert deleted == pii_ids, f"expected 10/10 PII deletions, got {deleted ^ pii_ids}"
    for frame_id in clean_ids:
        assert ws.obs_store.has_frame(frame_id), f"clean frame {frame_id} lost"
    for frame_id in pii_ids:
        assert not ws.obs_store.has_frame(frame_id)
    # no PII string ever reached a rendered prompt
    pii_markers = ("MRN:", "API_TOKEN=sk-", "card 4", "card 5", "card 6")
    for request in ws.pipeline.gateway.requests + ws.audit_gateway.requests:
        for marker in pii_markers:
            assert marker not in request.rendered

    # always-failing audit gateway: nothing reaches induction
    def broken(template_id, inputs):
        raise LookupError("audit offline")

    closed = simulated_workspace(tmp_path / "closed", PipelineConfig(),
                                 ProviderBinding(kind="mock", rulebook=broken))
    closed.pipeline.run_stream(observations)
    assert len(closed.store.live_nodes(Tier.OPERATION)) == 0
    assert len(closed.obs_store.observations) == 0
    assert len(closed.store.mutations) == 0


# ---------------------------------------------------------------------------
# 9. Ablations: structural signature + striving-count ordering
# ---------------------------------------------------------------------------

def test_ablation_structural_signature(tmp_path, context_file):
    out = tmp_path / "report"
    result = run_cli("ablate", "--corpus", FIXTURE, "--out", out, "--context", context_file)
    assert result.exit_code == 0, result.output

    lines = (out / "comparison.csv").read_text(encoding="utf-8").splitlines()
    rows = {parts[0]: parts for parts in (line.split(",") for line in lines[1:])}
    counts = {name: int(rows[name][1]) for name in rows}
    assert counts["full"] <= counts["no_context"] <= counts["no_hierarchy"], counts

    flat_export = json.loads((out / "no_hierarchy" / "export.json").read_text())
    tiers = {node["tier"] for node in flat_export["nodes"]}
    assert tiers <= {"striving"}, f"flat variant grew intermediate tiers: {tiers}"
    striving_ids = {node["id"] for node in flat_export["nodes"]}
    for edge in flat_export["edges"]:
        assert edge["kind"] != "parent_child" or edge["src"] not in striving_ids
    for node in flat_export["nodes"]:
        assert node["evidence"], "flat strivings carry direct observation evidence"


# ---------------------------------------------------------------------------
# 10. Store durability: random kill points -> replay passes all invariants
# ---------------------------------------------------------------------------

def test_durability_log_replay_after_random_kills(tmp_path, context_file):
    run_dir = tmp_path / "base"
    result = run_cli("replay", "--corpus", FIXTURE, "--out", run_dir, "--context", context_file)
    assert result.exit_code == 0, result.output
    log_bytes = (run_dir / "graph.log").read_bytes()
    lines = log_bytes.decode("utf-8").splitlines()
    assert len(lines) > 100

    def oracle_state(record_lines: list[str]) -> bytes:
        oracle = GraphStore()
        for line in record_lines:
            oracle.apply(Mutation.from_dict(json.loads(line)))
        return canonical_export_bytes(oracle, include_removed=True)

    rng = random.Random(0xD00D)
    crash_points: list[tuple[int, bool]] = [(rng.randint(0, len(lines) - 1), False) for _ in range(18)]
    crash_points += [(rng.randint(1, len(lines) - 1), True) for _ in range(2)]  # torn writes

    for index, (cut, torn) in enumerate(crash_points):
        crashed = tmp_path / f"crash-{index}.log"
        kept = lines[:cut + 1]
        text = "\n".join(kept) + "\n"
        if torn:
            # simulate a partially flushed final record
            text = "\n".join(kept[:-1]) + "\n" + kept[-1][: max(1, len(kept[-1]) // 2)]
        crashed.write_text(text, encoding="utf-8")

        replayed = GraphStore.open(crashed)
        problems = check_invariants(replayed)
        assert not problems, f"cut {index}: {problems}"
        survivors = kept[1:-1] if torn else kept[1:]
        assert canonical_export_bytes(replayed, include_removed=True) == oracle_state(survivors), \
            f"cut {index}: replay diverged from prefix oracle"
        replayed.close()

    # the intact log reproduces the final store exactly
    final = GraphStore.open(run_dir / "graph.log")
    assert canonical_export_bytes(final, include_removed=True) == oracle_state(lines[1:])
    assert not check_invariants(final)
    final.close()


def test_durability_real_sigkill_mid_replay(tmp_path, context_file):
    """Actually SIGKILL a replay subprocess and recover from whatever hit disk."""
    out = tmp_path / "killed"
    env = dict(os.environ)
    env["PYTHONPATH"] = str(Path(__file__).resolve().parents[1] / "src")
    process = subprocess.Popen(
        [sys.executable, "-m", "tempo.cli", "replay", "--corpus", str(FIXTURE),
         "--out", str(out), "--context", str(context_file)],
        env=env, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    time.sleep(random.Random(5).uniform(1.0, 2.0))
    process.send_signal(signal.SIGKILL)
    process.wait(timeout=30)

    log_path = out / "graph.log"
    if not log_path.exists():
        return  # killed before the store opened: nothing on disk is still a valid state
    replayed = GraphStore.open(log_path)
    assert not check_invariants(replayed)
    replayed.close()
