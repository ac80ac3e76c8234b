/** Wire types for the /v1 API. */

export type Tier = "operation" | "action" | "activity" | "striving";

export interface NodeDoc {
    id: string;
    tier: Tier;
    label: string;
    reasoning: string;
    confidence: number;
    status: "provisional" | "stable" | "removed";
    flags: string[];
    annotations: [string, string][];
    needs_review: boolean;
    evidence_count: number;
    children: NodeDoc[];
    low_confidence?: boolean;
}

export interface HierarchyDoc {
    strivings: NodeDoc[];
    unassigned_activities: NodeDoc[];
}

export interface EvidenceItem {
    kind: "frame" | "observation";
    id: string;
    observation_id?: string;
    captured_at: number;
    source_app?: string;
    source_url?: string | null;
    ocr_text?: string | null;
    frame_count?: number;
}

export interface EvidencePage {
    node_id: string;
    total: number;
    page: number;
    page_size: number;
    items: EvidenceItem[];
}

export interface EditRecordDoc {
    id: string;
    kind: string;
    targets: string[];
    payload: Record<string, unknown>;
    session_id: string;
    at: string;
    noop: boolean;
}

export interface EditResponse {
    edit: EditRecordDoc;
    retriggers: string[];
    subtree: NodeDoc | null;
}

export type EvidenceDisposition = "reassign_evidence" | "discard_evidence";

export type EditPayload =
    | { kind: "inline_edit"; node_id: string; new_label: string }
    | { kind: "reassign"; activity_id: string; new_striving_id: string; justification?: string }
    | { kind: "remove"; node_id: string; evidence_disposition: EvidenceDisposition }
    | { kind: "merge"; node_ids: string[]; target_label?: string }
    | { kind: "annotate"; node_id: string; annotation_type: string; text: string }
    | { kind: "endorse" | "reject" | "lock"; node_id: string };

export interface ParsedEdit {
    kind: string;
    payload: Record<string, unknown>;
    clarification?: string;
}

export interface ApiErrorBody {
    code: "not_found" | "invalid_payload" | "tier_violation" | "conflict" | "pipeline_busy";
    message: string;
    detail: Record<string, unknown>;
}

export class ApiError extends Error {
    constructor(public body: ApiErrorBody, public status: number) {
        super(`${body.code}: ${body.message}`);
    }
}
