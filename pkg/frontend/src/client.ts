import { ApiQuestion, ModelInfo, ResultDoc, StatusDoc } from "./types.js";

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin JSON wrapper over the session endpoints. */
export class ApiClient {
    constructor(
        private baseUrl: string = "",
        private fetchImpl: FetchLike = (u, i) => fetch(u, i),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const res = await this.fetchImpl(this.baseUrl + path, init);
        if (!res.ok) {
            let detail = `${res.status}`;
            try {
                const body = await res.json();
                detail = body.detail ?? JSON.stringify(body);
            } catch {
                // non-JSON error body; keep the status text
            }
            throw new ApiError(res.status, detail);
        }
        return (await res.json()) as T;
    }

    listModels(): Promise<{ models: ModelInfo[] }> {
        return this.request("/api/v1/models");
    }

    createSession(modelId: string, seed: number, poolSize?: number): Promise<{ session_id: string }> {
        return this.request("/api/v1/sessions", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ model_id: modelId, seed, pool_size: poolSize ?? 0 }),
        });
    }

    status(sessionId: string): Promise<StatusDoc> {
        return this.request(`/api/v1/sessions/${sessionId}`);
    }

    answer(sessionId: string, questionId: number, choice: "A" | "B"): Promise<unknown> {
        return this.request(`/api/v1/sessions/${sessionId}/answer`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ choice, question_id: questionId }),
        });
    }

    result(sessionId: string): Promise<ResultDoc> {
        return this.request(`/api/v1/sessions/${sessionId}/result`);
    }

    rate(sessionId: string, score: number): Promise<unknown> {
        return this.request(`/api/v1/sessions/${sessionId}/rating`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ score }),
        });
    }
}

export type { ApiQuestion };
