"""Ablation comparison report: delimited table plus rendered figures.

Writes ``comparison.csv`` with per-variant structural counts and a matching
``comparison.png`` bar chart. Figure output is deterministic under the mock
provider: fixed size, fixed ordering, no timestamps in metadata.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .graph import GraphStore, Tier

COLUMNS = ("variant", "strivings", "activities", "actions", "operations",
           "structural_depth", "mean_striving_confidence")


def variant_stats(variant: str, store: GraphStore) -> dict:
    strivings = store.live_nodes(Tier.STRIVING)
    activities = store.live_nodes(Tier.ACTIVITY)
    actions = store.live_nodes(Tier.ACTION)
    operations = store.live_nodes(Tier.OPERATION)
    if operations:
        depth = 4
    elif actions:
        depth = 3
    elif activities:
        depth = 2
    else:
        depth = 1 if strivings else 0
    mean_conf = (sum(s.confidence for s in strivings) / len(strivings)) if strivings else 0.0
    return {
        "variant": variant,
        "strivings": len(strivings),
        "activities": len(activities),
        "actions": len(actions),
        "operations": len(operations),
        "structural_depth": depth,
        "mean_striving_confidence": round(mean_conf, 2),
    }


def write_comparison_csv(rows: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def render_comparison_figure(rows: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    variants = [row["variant"] for row in rows]
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))

    left.bar(variants, [row["strivings"] for row in rows], color="#4c72b0")
    left.set_title("strivings per variant")
    left.set_ylabel("count")

    right.bar(variants, [row["structural_depth"] for row in rows], color="#55a868")
    right.set_title("structural depth")
    right.set_ylim(0, 4.5)
    right.set_yticks([0, 1, 2, 3, 4])

    for axis in (left, right):
        axis.tick_params(axis="x", rotation=15)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": "tempo"})
    plt.close(fig)
