// Shapes of the session API payloads.

export interface ModelInfo {
    id: string;
    kind: string;
}

export interface QuestionRow {
    attr: string;
    value: string;
}

export interface ApiQuestion {
    id: number;
    optionA: QuestionRow[];
    optionB: QuestionRow[];
}

export type SessionState = "running" | "awaiting_answer" | "done" | "aborted";

export interface StatusDoc {
    state: SessionState;
    question?: ApiQuestion;
    progress: { asked: number; live_candidates: number };
    error?: string;
}

export interface ResultCandidate {
    index: number | null;
    assignment: Record<string, string>;
    goals: Record<string, number>;
    valid: boolean;
}

export interface ResultDoc {
    selected: ResultCandidate[];
    best: ResultCandidate;
    log: { I: number; sizes: number[]; y_evaluations: number };
    seed: number;
    ratings?: number[];
}
