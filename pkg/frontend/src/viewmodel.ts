/** Pure projection of the hierarchy document plus local UI state into rows.
 *
 * No DOM and no fetching here: given the same document and UI state this
 * always produces the same rows, which is what the unit tests pin down.
 */

import { HierarchyDoc, NodeDoc, Tier } from "./types.js";

export interface UiState {
    expanded: Set<string>;
    selection: string[];       // checked node ids (multi-select for merge)
    focused: string | null;    // node whose evidence panel is open
    pendingEdit: boolean;      // at most one in-flight edit
}

export function initialUiState(): UiState {
    return { expanded: new Set(), selection: [], focused: null, pendingEdit: false };
}

export interface TreeRow {
    id: string;
    tier: Tier;
    depth: number;
    label: string;
    badges: string[];
    evidenceCount: number;
    expandable: boolean;
    expanded: boolean;
    checked: boolean;
    focused: boolean;
    unassigned: boolean;
}

export function badgesFor(node: NodeDoc): string[] {
    const badges = node.flags.map((flag) => flag.replace(/_/g, "-"));
    if (node.low_confidence) {
        badges.push("low-confidence");
    }
    if (node.needs_review) {
        badges.push("needs-review");
    }
    return badges;
}

function pushRows(node: NodeDoc, depth: number, ui: UiState, unassigned: boolean, out: TreeRow[]): void {
    const expandable = node.children.length > 0;
    const expanded = expandable && ui.expanded.has(node.id);
    out.push({
        id: node.id,
        tier: node.tier,
        depth,
        label: node.label,
        badges: badgesFor(node),
        evidenceCount: node.evidence_count,
        expandable,
        expanded,
        checked: ui.selection.includes(node.id),
        focused: ui.focused === node.id,
        unassigned,
    });
    if (expanded) {
        for (const child of node.children) {
            pushRows(child, depth + 1, ui, unassigned, out);
        }
    }
}

export function buildRows(doc: HierarchyDoc, ui: UiState): TreeRow[] {
    const rows: TreeRow[] = [];
    for (const striving of doc.strivings) {
        pushRows(striving, 0, ui, false, rows);
    }
    for (const activity of doc.unassigned_activities) {
        pushRows(activity, 0, ui, true, rows);
    }
    return rows;
}

export function findNode(doc: HierarchyDoc, id: string): NodeDoc | null {
    const stack: NodeDoc[] = [...doc.strivings, ...doc.unassigned_activities];
    while (stack.length) {
        const node = stack.pop()!;
        if (node.id === id) {
            return node;
        }
        stack.push(...node.children);
    }
    return null;
}

/** Splice a refreshed subtree over every occurrence of its node id. */
export function replaceSubtree(doc: HierarchyDoc, subtree: NodeDoc): HierarchyDoc {
    const swap = (node: NodeDoc): NodeDoc => {
        if (node.id === subtree.id) {
            return subtree;
        }
        return { ...node, children: node.children.map(swap) };
    };
    return {
        strivings: doc.strivings.map(swap),
        unassigned_activities: doc.unassigned_activities.map(swap),
    };
}

export function countNodes(doc: HierarchyDoc): number {
    let count = 0;
    const stack: NodeDoc[] = [...doc.strivings, ...doc.unassigned_activities];
    const seen = new Set<string>();
    while (stack.length) {
        const node = stack.pop()!;
        // multi-membership: an action may appear under several activities
        if (!seen.has(node.id)) {
            seen.add(node.id);
            count += 1;
        }
        stack.push(...node.children);
    }
    return count;
}

// ---------------------------------------------------------------------------
// Client-side mirrors of the engine's tier preconditions: no edit control is
// offered somewhere the server would refuse it.
// ---------------------------------------------------------------------------

export function canInlineEdit(node: NodeDoc): boolean {
    return node.tier === "striving" || node.tier === "activity";
}

export function canReassign(node: NodeDoc): boolean {
    return node.tier === "activity";
}

export function canRemove(node: NodeDoc): boolean {
    return node.tier !== "operation";
}

export function canMerge(nodes: NodeDoc[]): boolean {
    if (nodes.length < 2) {
        return false;
    }
    const tiers = new Set(nodes.map((n) => n.tier));
    if (tiers.size !== 1) {
        return false;
    }
    const tier = nodes[0]!.tier;
    return tier === "striving" || tier === "activity";
}
