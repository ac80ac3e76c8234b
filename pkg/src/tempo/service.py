"""Local HTTP service (loopback by default) exposing the hierarchy to the UI.

All endpoints live under /v1. Edits apply synchronously (the response
carries the refreshed subtree, so a read issued after an edit response
always reflects it) while their pipeline retriggers run asynchronously via
the forced-run endpoint or the background worker.
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import (
    ClarificationError,
    NotFoundError,
    PipelineBusyError,
    TempoError,
    TierViolationError,
    ValidationError,
)
from .graph import Tier
from .graph.types import node_sort_key
from .ingest import CaptureSettings
from .pipeline.records import QUESTION_IDS, UserContextDoc
from .privacy import remove_evidence
from .workspace import Workspace

ERROR_STATUS = {
    "not_found": 404,
    "invalid_payload": 400,
    "tier_violation": 422,
    "conflict": 409,
    "pipeline_busy": 409,
}


def _error(code: str, message: str, detail: Optional[dict] = None) -> JSONResponse:
    return JSONResponse(status_code=ERROR_STATUS[code],
                        content={"code": code, "message": message, "detail": detail or {}})


class PipelineWorker:
    """Serializes forced pipeline runs; rejects overlapping full runs."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace
        self._lock = threading.Lock()
        self._run_counter = 0

    def start(self, stage: Optional[str]) -> str:
        if not self._lock.acquire(blocking=False):
            raise PipelineBusyError("a pipeline run is already in flight")
        self._run_counter += 1
        run_id = f"run-{self._run_counter}"

        def work():
            try:
                self.workspace.pipeline.run_forced(stage)
            finally:
                self._lock.release()

        thread = threading.Thread(target=work, name=f"pipeline-{run_id}", daemon=True)
        thread.start()
        return run_id

    @property
    def busy(self) -> bool:
        if self._lock.acquire(blocking=False):
            self._lock.release()
            return False
        return True


def node_document(workspace: Workspace, node, depth: int = 3) -> dict:
    store = workspace.store
    threshold = workspace.config.confidence_threshold
    evidence = [ref for ref in store.resolve_evidence(node.id)
                if workspace.obs_store.has_frame(ref) or ref in workspace.obs_store.observations]
    doc = {
        "id": node.id,
        "tier": node.tier.value,
        "label": node.label,
        "reasoning": node.reasoning,
        "confidence": node.confidence,
        "status": node.status.value,
        "flags": sorted(f.value for f in node.flags),
        "annotations": [list(a) for a in node.annotations],
        "needs_review": node.needs_review,
        "evidence_count": len(evidence),
        "children": [],
    }
    if node.tier == Tier.STRIVING:
        doc["low_confidence"] = node.confidence < threshold
    if depth > 0:
        doc["children"] = [node_document(workspace, child, depth - 1)
                           for child in store.children(node.id)]
    return doc


TIER_DEPTH = {"striving": 0, "activity": 1, "action": 2, "operation": 3}


def hierarchy_document(workspace: Workspace, min_confidence: Optional[int] = None,
                       tier: Optional[str] = None) -> dict:
    """Tree of strivings down to actions; ``tier`` prunes below that tier."""
    store = workspace.store
    depth = TIER_DEPTH.get(tier, 2) if tier is not None else 2
    strivings = store.live_nodes(Tier.STRIVING)
    docs = [node_document(workspace, s, depth=depth) for s in strivings]
    if min_confidence is not None:
        for doc in docs:
            doc["low_confidence"] = doc["confidence"] < min_confidence
    assigned = {child.id for s in strivings for child in store.children(s.id)}
    orphans = [a for a in store.live_nodes(Tier.ACTIVITY) if a.id not in assigned]
    return {
        "strivings": docs,
        "unassigned_activities": [node_document(workspace, a, depth=max(0, depth - 1))
                                  for a in orphans],
    }


def create_app(workspace: Workspace, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="tempo", version="1.0")
    worker = PipelineWorker(workspace)
    engine = workspace.edit_engine

    @app.exception_handler(TempoError)
    async def tempo_error_handler(request: Request, exc: TempoError):
        if isinstance(exc, NotFoundError):
            return _error("not_found", str(exc))
        if isinstance(exc, TierViolationError):
            return _error("tier_violation", str(exc))
        if isinstance(exc, PipelineBusyError):
            return _error("pipeline_busy", str(exc))
        if isinstance(exc, ClarificationError):
            return _error("invalid_payload", str(exc), {"clarification": str(exc)})
        return _error("invalid_payload", str(exc))

    # ------------------------------------------------------------------
    # Hierarchy + evidence
    # ------------------------------------------------------------------

    @app.get("/v1/hierarchy")
    def get_hierarchy(min_confidence: Optional[int] = None, tier: Optional[str] = None):
        if tier is not None and tier not in TIER_DEPTH:
            raise ValidationError(f"unknown tier filter {tier!r}")
        return hierarchy_document(workspace, min_confidence, tier)

    @app.get("/v1/nodes/{node_id}")
    def get_node(node_id: str):
        node = workspace.store.node(node_id)
        if node.removed:
            raise NotFoundError(f"node {node_id!r} is removed")
        return node_document(workspace, node)

    @app.get("/v1/nodes/{node_id}/evidence")
    def get_evidence(node_id: str, page: int = 1, page_size: int = 20):
        node = workspace.store.node(node_id)
        if node.removed:
            raise NotFoundError(f"node {node_id!r} is removed")
        refs = [ref for ref in workspace.store.resolve_evidence(node_id)
                if workspace.obs_store.has_frame(ref) or ref in workspace.obs_store.observations]
        items = []
        for ref in refs:
            if workspace.obs_store.has_frame(ref):
                frame = workspace.obs_store.frame(ref)
                items.append({
                    "kind": "frame",
                    "id": frame.id,
                    "observation_id": workspace.obs_store.observation_of_frame(ref),
                    "captured_at": frame.captured_at,
                    "source_app": frame.source_app,
                    "source_url": frame.source_url,
                    "ocr_text": frame.ocr_text,
                })
            else:
                obs = workspace.obs_store.get(ref)
                items.append({"kind": "observation", "id": obs.id,
                              "captured_at": obs.time_range[0],
                              "frame_count": len(obs.frames)})
        items.sort(key=lambda item: (item["captured_at"], node_sort_key(item["id"])))
        start = (page - 1) * page_size
        return {"node_id": node_id, "total": len(items), "page": page,
                "page_size": page_size, "items": items[start:start + page_size]}

    @app.delete("/v1/evidence/{ref_id}")
    def delete_evidence(ref_id: str):
        ack = remove_evidence(workspace.store, workspace.obs_store, ref_id,
                              cause=engine.current_session.id if engine.current_session else "api",
                              ts=workspace.clock.now())
        for node_id in ack["nodes_touched"]:
            engine.note_screenshot_removal(node_id)
        return ack

    # ------------------------------------------------------------------
    # Edits
    # ------------------------------------------------------------------

    def _subtree(node_id: str) -> Optional[dict]:
        node = workspace.store.maybe_node(node_id)
        if node is None or node.removed:
            return None
        return node_document(workspace, node)

    @app.post("/v1/edits")
    def post_edit(payload: dict):
        kind = payload.get("kind")
        if kind == "inline_edit":
            record = engine.inline_edit(payload["node_id"], payload["new_label"])
            subtree_root = payload["node_id"]
        elif kind == "reassign":
            record = engine.reassign(payload["activity_id"], payload["new_striving_id"],
                                     payload.get("justification", ""))
            subtree_root = payload["new_striving_id"]
        elif kind == "remove":
            record = engine.remove(payload["node_id"],
                                   payload.get("evidence_disposition", "reassign_evidence"))
            subtree_root = payload["node_id"]
        elif kind == "merge":
            record = engine.merge(payload["node_ids"], payload.get("target_label"))
            subtree_root = record.payload["merged_id"]
        elif kind == "annotate":
            record = engine.annotate(payload["node_id"], payload.get("annotation_type", "note"),
                                     payload["text"])
            subtree_root = payload["node_id"]
        elif kind in ("endorse", "reject", "lock"):
            record = getattr(engine, kind)(payload["node_id"])
            subtree_root = payload["node_id"]
        else:
            raise ValidationError(f"unknown edit kind {kind!r}")
        return {
            "edit": record.to_dict(),
            "retriggers": list(engine.retrigger(record, workspace.store)) if not record.noop else [],
            "subtree": _subtree(subtree_root),
        }

    @app.post("/v1/edits/parse")
    def parse_edit(payload: dict):
        text = payload.get("text", "")
        if not text.strip():
            raise ValidationError("empty edit request")
        from .graph.export import tree_text
        parsed = engine.parse_natural_language(text, workspace.pipeline.gateway,
                                               hierarchy_text=tree_text(workspace.store))
        return {"parsed": parsed}

    # ------------------------------------------------------------------
    # Settings + context
    # ------------------------------------------------------------------

    @app.get("/v1/settings")
    def get_settings():
        return workspace.settings.to_dict()

    @app.put("/v1/settings")
    def put_settings(payload: dict):
        settings = CaptureSettings.from_dict(payload)
        workspace.save_settings(settings)
        return settings.to_dict()

    @app.get("/v1/context")
    def get_context():
        return workspace.context_doc.to_dict()

    @app.put("/v1/context")
    def put_context(payload: dict):
        answers = payload.get("answers")
        if not isinstance(answers, dict) or set(answers) != set(QUESTION_IDS):
            raise ValidationError(
                f"context must supply exactly the twelve slots {list(QUESTION_IDS)}")
        doc = UserContextDoc(answers={qid: str(answers[qid]) for qid in QUESTION_IDS})
        workspace.save_context(doc)
        return {"ok": True, "last_edited": workspace.context_doc.last_edited}

    # ------------------------------------------------------------------
    # Pipeline controls
    # ------------------------------------------------------------------

    @app.post("/v1/pipeline/run")
    def post_pipeline_run(payload: Optional[dict] = None):
        stage = (payload or {}).get("stage")
        if stage is not None and stage not in ("segment", "reconcile", "synthesize", "refine"):
            raise ValidationError(f"unknown stage {stage!r}")
        run_id = worker.start(stage)
        return {"run_id": run_id}

    @app.get("/v1/pipeline/events")
    def get_pipeline_events(since: int = 0):
        return {"events": [e.to_dict() for e in workspace.events.since(since)],
                "busy": worker.busy}

    # ------------------------------------------------------------------
    # Review sessions
    # ------------------------------------------------------------------

    @app.post("/v1/sessions/start")
    def start_session():
        session = engine.start_session()
        return {"session_id": session.id}

    @app.post("/v1/sessions/end")
    def end_session():
        session = engine.end_session()
        if session is None:
            raise ValidationError("no review session in progress")
        return {"session_id": session.id, "summary": engine.render_review_edits(session)}

    if ui_dir is not None:
        # same-origin static hosting of the built UI; keeps everything loopback
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
