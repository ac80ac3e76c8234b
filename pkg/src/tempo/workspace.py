"""Wires one data directory's worth of state into a running system.

Directory layout::

    <data_dir>/
      graph.log              append-only mutation log (source of truth)
      graph.snapshot         latest on-demand snapshot
      observations.jsonl     journaled observation store
      events.log             pipeline event log
      audit_decisions.jsonl  persisted audit decisions
      quarantine/            locally retained, never-transmitted observations
      settings.json          capture settings
      context.json           user-provided onboarding context
      export.json            canonical export (written by replay/export)
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

from .clock import SimulatedClock, WallClock
from .config import PipelineConfig
from .edits import EditEngine
from .evidence import ObservationStore
from .gateway import ModelGateway, ProviderBinding
from .graph import GraphStore
from .graph.export import canonical_export_bytes
from .ingest import CaptureSettings
from .pipeline import EventLog, UserContextDoc, build_variant_pipeline
from .pipeline.records import QUESTION_IDS
from .privacy import AuditGuard, default_patterns, load_patterns

logger = logging.getLogger(__name__)


class Workspace:
    def __init__(self, data_dir: str | Path, config: PipelineConfig,
                 binding: ProviderBinding, clock=None, variant: str = "full",
                 pattern_config: Optional[str | Path] = None,
                 template_dir: Optional[str | Path] = None):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.binding = binding
        self.clock = clock if clock is not None else WallClock()
        self.variant = variant
        self._template_dir = template_dir

        self.store = GraphStore.open(self.dir / "graph.log")
        self.obs_store = ObservationStore(self.dir / "observations.jsonl")
        self.events = EventLog(self.dir / "events.log")
        self.patterns = load_patterns(pattern_config) if pattern_config else default_patterns()
        self.settings = self._load_settings()
        self.context_doc = self._load_context()

        def gateway_factory(blank_placeholders) -> ModelGateway:
            return ModelGateway(binding, template_dir=template_dir,
                                blank_placeholders=blank_placeholders,
                                max_retries=config.max_retries)

        self.audit_gateway = gateway_factory(("user_context",) if variant != "full" else ())
        self.audit_guard = AuditGuard(self.audit_gateway, self.dir / "quarantine",
                                      self.dir / "audit_decisions.jsonl",
                                      context_k=config.context_k)

        self.edit_engine = EditEngine(self.store, self.clock, pipeline=None,
                                      user_name=config.user_name)
        self.pipeline = build_variant_pipeline(
            variant,
            store=self.store,
            obs_store=self.obs_store,
            gateway_factory=gateway_factory,
            audit_guard=self.audit_guard,
            patterns=self.patterns,
            config=config,
            clock=self.clock,
            events=self.events,
            context_doc=self.context_doc,
            constraint_block_fn=self.edit_engine.render_constraint_block,
            review_edits_fn=self.edit_engine.render_review_edits,
        )
        self.edit_engine.pipeline = self.pipeline

    # ------------------------------------------------------------------
    # Persisted settings / context
    # ------------------------------------------------------------------

    def _load_settings(self) -> CaptureSettings:
        path = self.dir / "settings.json"
        if path.exists():
            return CaptureSettings.from_dict(json.loads(path.read_text(encoding="utf-8")))
        return CaptureSettings(sampling_interval_s=self.config.sampling_interval_s)

    def save_settings(self, settings: CaptureSettings) -> None:
        settings.validate()
        self.settings = settings
        (self.dir / "settings.json").write_text(
            json.dumps(settings.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def _load_context(self) -> UserContextDoc:
        path = self.dir / "context.json"
        if path.exists():
            raw = json.loads(path.read_text(encoding="utf-8"))
            doc = UserContextDoc(answers={qid: raw["answers"].get(qid, "") for qid in QUESTION_IDS})
            doc.validate()
            return doc
        return UserContextDoc()

    def save_context(self, doc: UserContextDoc) -> None:
        doc.validate()
        doc.last_edited = self.clock.now()
        self.context_doc.answers = dict(doc.answers)
        self.context_doc.last_edited = doc.last_edited
        (self.dir / "context.json").write_text(
            json.dumps(self.context_doc.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    # ------------------------------------------------------------------

    def write_export(self, include_removed: bool = False) -> Path:
        path = self.dir / "export.json"
        path.write_bytes(canonical_export_bytes(self.store, include_removed=include_removed,
                                                confidence_threshold=self.config.confidence_threshold))
        return path

    def write_snapshot(self) -> Path:
        path = self.dir / "graph.snapshot"
        path.write_bytes(self.store.snapshot())
        return path

    def close(self) -> None:
        self.store.close()
        self.obs_store.close()
        self.events.close()


def simulated_workspace(data_dir, config, binding, variant: str = "full", **kwargs) -> Workspace:
    return Workspace(data_dir, config, binding, clock=SimulatedClock(), variant=variant, **kwargs)
