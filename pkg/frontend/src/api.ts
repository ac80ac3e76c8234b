/** Typed client for the local /v1 service; the only way the UI touches data. */

import {
    ApiError,
    ApiErrorBody,
    EditPayload,
    EditResponse,
    EvidencePage,
    HierarchyDoc,
    NodeDoc,
    ParsedEdit,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private baseUrl: string = "",
        private fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
        if (body !== undefined) {
            init.body = JSON.stringify(body);
        }
        const response = await this.fetchFn(this.baseUrl + path, init);
        const payload = await response.json();
        if (!response.ok) {
            throw new ApiError(payload as ApiErrorBody, response.status);
        }
        return payload as T;
    }

    getHierarchy(minConfidence?: number): Promise<HierarchyDoc> {
        const query = minConfidence === undefined ? "" : `?min_confidence=${minConfidence}`;
        return this.request("GET", `/v1/hierarchy${query}`);
    }

    getNode(nodeId: string): Promise<NodeDoc> {
        return this.request("GET", `/v1/nodes/${nodeId}`);
    }

    getEvidence(nodeId: string, page = 1, pageSize = 20): Promise<EvidencePage> {
        return this.request("GET", `/v1/nodes/${nodeId}/evidence?page=${page}&page_size=${pageSize}`);
    }

    deleteEvidence(refId: string): Promise<{ removed: string[]; nodes_touched: string[] }> {
        return this.request("DELETE", `/v1/evidence/${refId}`);
    }

    postEdit(payload: EditPayload): Promise<EditResponse> {
        return this.request("POST", "/v1/edits", payload);
    }

    parseEdit(text: string): Promise<{ parsed: ParsedEdit }> {
        return this.request("POST", "/v1/edits/parse", { text });
    }

    runPipeline(stage?: string): Promise<{ run_id: string }> {
        return this.request("POST", "/v1/pipeline/run", stage ? { stage } : {});
    }

    getEvents(since = 0): Promise<{ events: unknown[]; busy: boolean }> {
        return this.request("GET", `/v1/pipeline/events?since=${since}`);
    }

    startSession(): Promise<{ session_id: string }> {
        return this.request("POST", "/v1/sessions/start", {});
    }

    endSession(): Promise<{ session_id: string; summary: string }> {
        return this.request("POST", "/v1/sessions/end", {});
    }
}
