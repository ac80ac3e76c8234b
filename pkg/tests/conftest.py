from __future__ import annotations

import pytest

from tempo.graph import Actor, GraphStore, Mutation, MutationKind


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        status = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {item.name}: {status}")


def submit(store: GraphStore, kind: MutationKind, payload: dict, actor=Actor.PIPELINE,
           cause: str = "test", ts: int = 0):
    return store.apply(Mutation(kind=kind, payload=payload, actor=actor, cause=cause, ts=ts))


def create_node(store: GraphStore, tier: str, label: str, actor=Actor.PIPELINE,
                ts: int = 0, **extra) -> str:
    payload = {"tier": tier, "label": label, **extra}
    verdict = submit(store, MutationKind.CREATE_NODE, payload, actor=actor, ts=ts)
    return verdict.affected[0]


def add_edge(store: GraphStore, src: str, dst: str, kind: str = "parent_child",
             actor=Actor.PIPELINE, ts: int = 0):
    return submit(store, MutationKind.ADD_EDGE, {"src": src, "dst": dst, "kind": kind},
                  actor=actor, ts=ts)


@pytest.fixture
def store(tmp_path):
    s = GraphStore(tmp_path / "graph.log")
    yield s
    s.close()
