/** Controller + DOM for the hierarchy editor.
 *
 * No optimistic mutation anywhere: the server's response (or a hierarchy
 * refetch for structural edits) is the only thing that updates the view.
 * Errors surface their API code verbatim. At most one edit is in flight.
 */

import { ApiClient } from "./api.js";
import {
    ApiError,
    EditPayload,
    EvidenceDisposition,
    EvidencePage,
    HierarchyDoc,
    NodeDoc,
} from "./types.js";
import {
    TreeRow,
    UiState,
    buildRows,
    canInlineEdit,
    canMerge,
    canReassign,
    canRemove,
    findNode,
    initialUiState,
    replaceSubtree,
} from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, attrs: Record<string, string> = {}, text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
        node.setAttribute(key, value);
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}

export class App {
    doc: HierarchyDoc = { strivings: [], unassigned_activities: [] };
    ui: UiState = initialUiState();
    evidence: EvidencePage | null = null;
    message = "";
    flatView = false;
    lastOperation: Promise<void> = Promise.resolve();

    constructor(private root: HTMLElement, readonly api: ApiClient) {}

    // ------------------------------------------------------------------
    // Lifecycle
    // ------------------------------------------------------------------

    async load(): Promise<void> {
        this.doc = await this.api.getHierarchy();
        this.render();
    }

    private track(work: Promise<void>): Promise<void> {
        this.lastOperation = work.catch(() => undefined);
        return work;
    }

    private fail(error: unknown): void {
        if (error instanceof ApiError) {
            this.message = `${error.body.code}: ${error.body.message}`;
        } else {
            this.message = `request failed: ${String(error)}`;
        }
        this.ui.pendingEdit = false;
        this.render();
    }

    // ------------------------------------------------------------------
    // Edit actions (DOM handlers delegate 1:1 to these)
    // ------------------------------------------------------------------

    private async edit(payload: EditPayload, refetch: boolean): Promise<void> {
        if (this.ui.pendingEdit) {
            throw new Error("an edit is already in flight");
        }
        this.ui.pendingEdit = true;
        this.render();
        try {
            const response = await this.api.postEdit(payload);
            if (!refetch && response.subtree) {
                this.doc = replaceSubtree(this.doc, response.subtree);
            } else {
                this.doc = await this.api.getHierarchy();
            }
            this.message = `${response.edit.kind} applied (${response.edit.id})`;
        } catch (error) {
            this.fail(error);
            throw error;
        } finally {
            this.ui.pendingEdit = false;
        }
        this.render();
    }

    /** Inline edit refreshes just the affected subtree from the response. */
    inlineEdit(nodeId: string, newLabel: string): Promise<void> {
        return this.track(this.edit({ kind: "inline_edit", node_id: nodeId, new_label: newLabel }, false));
    }

    reassign(activityId: string, strivingId: string, justification?: string): Promise<void> {
        const payload: EditPayload = justification
            ? { kind: "reassign", activity_id: activityId, new_striving_id: strivingId, justification }
            : { kind: "reassign", activity_id: activityId, new_striving_id: strivingId };
        return this.track(this.edit(payload, true));
    }

    remove(nodeId: string, disposition: EvidenceDisposition): Promise<void> {
        if (this.ui.focused === nodeId) {
            this.ui.focused = null;
            this.evidence = null;
        }
        return this.track(this.edit({ kind: "remove", node_id: nodeId, evidence_disposition: disposition }, true));
    }

    merge(nodeIds: string[], targetLabel?: string): Promise<void> {
        const payload: EditPayload = targetLabel
            ? { kind: "merge", node_ids: nodeIds, target_label: targetLabel }
            : { kind: "merge", node_ids: nodeIds };
        this.ui.selection = [];
        return this.track(this.edit(payload, true));
    }

    async submitNaturalLanguage(text: string): Promise<void> {
        try {
            const { parsed } = await this.api.parseEdit(text);
            this.message = `parsed as ${parsed.kind}; confirm to apply`;
            this.openParsedEditDialog(parsed.kind, parsed.payload);
            this.render();
        } catch (error) {
            if (error instanceof ApiError && error.body.detail["clarification"]) {
                this.message = String(error.body.detail["clarification"]);
                this.render();
                return;
            }
            this.fail(error);
            throw error;
        }
    }

    async focusNode(nodeId: string): Promise<void> {
        this.ui.focused = nodeId;
        this.evidence = null;
        this.render();
        try {
            this.evidence = await this.api.getEvidence(nodeId, 1);
        } catch (error) {
            this.fail(error);
            throw error;
        }
        this.render();
    }

    async loadEvidencePage(page: number): Promise<void> {
        if (!this.ui.focused) {
            return;
        }
        this.evidence = await this.api.getEvidence(this.ui.focused, page);
        this.render();
    }

    /** Per-frame removal from the evidence panel; counts refresh from the server. */
    async removeEvidence(refId: string): Promise<void> {
        const nodeId = this.ui.focused;
        if (!nodeId) {
            return;
        }
        try {
            await this.api.deleteEvidence(refId);
            this.evidence = await this.api.getEvidence(nodeId, this.evidence?.page ?? 1);
            const fresh = await this.api.getNode(nodeId);
            this.doc = replaceSubtree(this.doc, fresh);
        } catch (error) {
            this.fail(error);
            throw error;
        }
        this.render();
    }

    toggleExpand(nodeId: string): void {
        if (this.ui.expanded.has(nodeId)) {
            this.ui.expanded.delete(nodeId);
        } else {
            this.ui.expanded.add(nodeId);
        }
        this.render();
    }

    toggleChecked(nodeId: string): void {
        const index = this.ui.selection.indexOf(nodeId);
        if (index >= 0) {
            this.ui.selection.splice(index, 1);
        } else {
            this.ui.selection.push(nodeId);
        }
        this.render();
    }

    // ------------------------------------------------------------------
    // Dialogs
    // ------------------------------------------------------------------

    /** The remove dialog always offers both evidence dispositions. */
    openRemoveDialog(nodeId: string): void {
        const node = findNode(this.doc, nodeId);
        if (!node || !canRemove(node)) {
            return;
        }
        const dialog = this.dialog(`Remove ${node.tier} ${node.id}?`);
        const form = el("form", { id: "remove-form" });
        const options: [EvidenceDisposition, string][] = [
            ["reassign_evidence", "Reassign its evidence to remaining goals"],
            ["discard_evidence", "Discard its evidence entirely"],
        ];
        for (const [value, label] of options) {
            const wrapper = el("label", { class: "radio-option" });
            const radio = el("input", { type: "radio", name: "disposition", value });
            if (value === "reassign_evidence") {
                radio.setAttribute("checked", "checked");
            }
            wrapper.append(radio, document.createTextNode(" " + label));
            form.append(wrapper);
        }
        const confirm = el("button", { type: "button", id: "remove-confirm" }, "Remove");
        confirm.addEventListener("click", () => {
            const choice = form.querySelector<HTMLInputElement>("input[name=disposition]:checked");
            this.closeDialog();
            void this.remove(nodeId, (choice?.value ?? "reassign_evidence") as EvidenceDisposition);
        });
        form.append(confirm, this.cancelButton());
        dialog.append(form);
    }

    openMergeDialog(): void {
        const nodes = this.ui.selection
            .map((id) => findNode(this.doc, id))
            .filter((n): n is NodeDoc => n !== null);
        if (!canMerge(nodes)) {
            return;
        }
        const dialog = this.dialog(`Merge ${nodes.length} ${nodes[0]!.tier === "striving" ? "strivings" : "activities"}`);
        const input = el("input", { type: "text", id: "merge-label", placeholder: "optional merged label" });
        const confirm = el("button", { type: "button", id: "merge-confirm" }, "Merge");
        confirm.addEventListener("click", () => {
            const label = input.value.trim();
            this.closeDialog();
            void this.merge(nodes.map((n) => n.id), label || undefined);
        });
        dialog.append(input, confirm, this.cancelButton());
    }

    openReassignDialog(activityId: string): void {
        const dialog = this.dialog(`Reassign ${activityId} to:`);
        const select = el("select", { id: "reassign-target" });
        for (const striving of this.doc.strivings) {
            select.append(el("option", { value: striving.id }, `${striving.id}: ${striving.label}`));
        }
        const justification = el("input", {
            type: "text", id: "reassign-justification", placeholder: "justification (optional)",
        });
        const confirm = el("button", { type: "button", id: "reassign-confirm" }, "Reassign");
        confirm.addEventListener("click", () => {
            const target = select.value;
            const note = justification.value.trim();
            this.closeDialog();
            void this.reassign(activityId, target, note || undefined);
        });
        dialog.append(select, justification, confirm, this.cancelButton());
    }

    openInlineEditDialog(nodeId: string): void {
        const node = findNode(this.doc, nodeId);
        if (!node || !canInlineEdit(node)) {
            return;
        }
        const dialog = this.dialog(`Rewrite ${node.id}`);
        const input = el("input", { type: "text", id: "inline-edit-input", value: node.label });
        const confirm = el("button", { type: "button", id: "inline-edit-confirm" }, "Save");
        confirm.addEventListener("click", () => {
            const label = input.value;
            this.closeDialog();
            void this.inlineEdit(nodeId, label);
        });
        dialog.append(input, confirm, this.cancelButton());
    }

    private openParsedEditDialog(kind: string, payload: Record<string, unknown>): void {
        const dialog = this.dialog(`Apply parsed edit: ${kind}?`);
        dialog.append(el("pre", { id: "parsed-payload" }, JSON.stringify(payload, null, 1)));
        const confirm = el("button", { type: "button", id: "parsed-confirm" }, "Apply");
        confirm.addEventListener("click", () => {
            this.closeDialog();
            void this.track(this.edit({ kind, ...payload } as EditPayload, kind !== "inline_edit"));
        });
        dialog.append(confirm, this.cancelButton());
    }

    private dialog(title: string): HTMLElement {
        this.closeDialog();
        const overlay = el("div", { class: "dialog", id: "dialog" });
        overlay.append(el("h3", {}, title));
        this.root.querySelector("#dialog-root")!.append(overlay);
        return overlay;
    }

    closeDialog(): void {
        this.root.querySelector("#dialog")?.remove();
    }

    private cancelButton(): HTMLElement {
        const button = el("button", { type: "button", class: "dialog-cancel" }, "Cancel");
        button.addEventListener("click", () => this.closeDialog());
        return button;
    }

    // ------------------------------------------------------------------
    // Rendering
    // ------------------------------------------------------------------

    render(): void {
        let tree = this.root.querySelector("#tree");
        if (!tree) {
            this.root.innerHTML = `
              <div class="toolbar">
                <button id="merge-button" type="button">Merge selected</button>
                <button id="flat-toggle" type="button">Toggle flat view</button>
                <span id="pending"></span>
              </div>
              <div class="content">
                <div id="tree"></div>
                <div id="panel"></div>
              </div>
              <div class="nl">
                <input id="nl-input" type="text"
                       placeholder="describe an edit, e.g. rename striving-1 to ..." />
                <button id="nl-send" type="button">Parse</button>
              </div>
              <div id="message"></div>
              <div id="dialog-root"></div>`;
            this.root.querySelector("#merge-button")!.addEventListener("click", () => this.openMergeDialog());
            this.root.querySelector("#flat-toggle")!.addEventListener("click", () => {
                this.flatView = !this.flatView;
                this.render();
            });
            this.root.querySelector("#nl-send")!.addEventListener("click", () => {
                const input = this.root.querySelector<HTMLInputElement>("#nl-input")!;
                void this.track(this.submitNaturalLanguage(input.value));
            });
            tree = this.root.querySelector("#tree")!;
        }
        this.renderTree(tree as HTMLElement);
        this.renderPanel(this.root.querySelector("#panel") as HTMLElement);
        this.root.querySelector("#message")!.textContent = this.message;
        this.root.querySelector("#pending")!.textContent = this.ui.pendingEdit ? "saving…" : "";
        const nodes = this.ui.selection
            .map((id) => findNode(this.doc, id))
            .filter((n): n is NodeDoc => n !== null);
        (this.root.querySelector("#merge-button") as HTMLButtonElement).disabled =
            !canMerge(nodes) || this.ui.pendingEdit;
    }

    private renderTree(container: HTMLElement): void {
        container.innerHTML = "";
        if (this.flatView) {
            this.renderFlatView(container);
            return;
        }
        const rows = buildRows(this.doc, this.ui);
        if (rows.length === 0) {
            container.append(el("p", { class: "empty" }, "No strivings yet; the hierarchy appears after the first synthesis."));
            return;
        }
        let unassignedHeader = false;
        for (const row of rows) {
            if (row.unassigned && !unassignedHeader) {
                container.append(el("h4", { class: "unassigned-header" }, "Unassigned activities"));
                unassignedHeader = true;
            }
            container.append(this.renderRow(row));
        }
    }

    private renderRow(row: TreeRow): HTMLElement {
        const div = el("div", {
            class: `tree-row tier-${row.tier}${row.focused ? " focused" : ""}`,
            "data-id": row.id,
            style: `margin-left:${row.depth * 1.4}em`,
        });
        const twisty = el("button", { type: "button", class: "twisty" },
                          row.expandable ? (row.expanded ? "▾" : "▸") : "·");
        if (row.expandable) {
            twisty.addEventListener("click", () => this.toggleExpand(row.id));
        }
        div.append(twisty);
        if (row.tier === "striving" || row.tier === "activity") {
            const check = el("input", { type: "checkbox", class: "row-check" });
            check.checked = row.checked;
            check.addEventListener("change", () => this.toggleChecked(row.id));
            div.append(check);
        }
        const label = el("span", { class: "row-label" }, `${row.id}: ${row.label}`);
        label.addEventListener("click", () => void this.focusNode(row.id));
        div.append(label);
        for (const badge of row.badges) {
            div.append(el("span", { class: `badge badge-${badge}` }, badge));
        }
        div.append(el("span", { class: "evidence-count" }, `${row.evidenceCount}`));
        return div;
    }

    /** Read-only comparison page: strivings over raw evidence, no edit stack. */
    private renderFlatView(container: HTMLElement): void {
        container.append(el("h4", {}, "Flat view (read-only)"));
        for (const striving of this.doc.strivings) {
            const div = el("div", { class: "flat-row", "data-id": striving.id });
            div.append(el("span", { class: "row-label" }, `${striving.id}: ${striving.label}`));
            div.append(el("span", { class: "evidence-count" }, `${striving.evidence_count} frames`));
            container.append(div);
        }
    }

    private renderPanel(panel: HTMLElement): void {
        panel.innerHTML = "";
        const nodeId = this.ui.focused;
        const node = nodeId ? findNode(this.doc, nodeId) : null;
        if (!nodeId || !node) {
            panel.append(el("p", { class: "empty" }, "Select a node to inspect its evidence."));
            return;
        }
        panel.append(el("h3", {}, `${node.id} (${node.tier})`));
        panel.append(el("p", { class: "node-label" }, node.label));
        if (node.reasoning) {
            panel.append(el("p", { class: "node-reasoning" }, node.reasoning));
        }

        const actions = el("div", { class: "node-actions" });
        if (canInlineEdit(node)) {
            const button = el("button", { type: "button", id: "action-inline-edit" }, "Edit label");
            button.addEventListener("click", () => this.openInlineEditDialog(node.id));
            actions.append(button);
        }
        if (canReassign(node)) {
            const button = el("button", { type: "button", id: "action-reassign" }, "Reassign");
            button.addEventListener("click", () => this.openReassignDialog(node.id));
            actions.append(button);
        }
        if (canRemove(node)) {
            const button = el("button", { type: "button", id: "action-remove" }, "Remove");
            button.addEventListener("click", () => this.openRemoveDialog(node.id));
            actions.append(button);
        }
        panel.append(actions);

        const evidence = el("div", { id: "evidence" });
        if (!this.evidence) {
            evidence.append(el("p", {}, "loading evidence…"));
        } else if (this.evidence.total === 0) {
            evidence.append(el("p", { class: "empty" },
                               "No evidence behind this node; it may need review."));
        } else {
            for (const item of this.evidence.items) {
                const row = el("div", { class: "evidence-item", "data-ref": item.id });
                const text = item.kind === "frame"
                    ? `${item.source_app ?? "?"}: ${item.ocr_text ?? "(no text)"}`
                    : `observation ${item.id} (${item.frame_count} frames)`;
                row.append(el("span", { class: "evidence-text" }, text));
                const removeButton = el("button", { type: "button", class: "evidence-remove" }, "✕");
                removeButton.addEventListener("click", () => void this.track(this.removeEvidence(item.id)));
                row.append(removeButton);
                evidence.append(row);
            }
            const pages = Math.max(1, Math.ceil(this.evidence.total / this.evidence.page_size));
            const pager = el("div", { class: "pager" },
                             `page ${this.evidence.page}/${pages} (${this.evidence.total} items)`);
            if (this.evidence.page > 1) {
                const prev = el("button", { type: "button", class: "pager-prev" }, "prev");
                prev.addEventListener("click", () => void this.track(this.loadEvidencePage(this.evidence!.page - 1)));
                pager.append(prev);
            }
            if (this.evidence.page < pages) {
                const next = el("button", { type: "button", class: "pager-next" }, "next");
                next.addEventListener("click", () => void this.track(this.loadEvidencePage(this.evidence!.page + 1)));
                pager.append(next);
            }
            evidence.append(pager);
        }
        panel.append(evidence);
    }
}

export function mount(root: HTMLElement, baseUrl = ""): App {
    const app = new App(root, new ApiClient(baseUrl));
    void app.load();
    return app;
}
