import { ApiQuestion, QuestionRow, ResultDoc } from "./types.js";

export interface CardView {
    /** which server option this card submits ("A" | "B") */
    submits: "A" | "B";
    rows: QuestionRow[];
}

export interface QuestionView {
    questionId: number;
    flipped: boolean; // option B shown on the left
    left: CardView;
    right: CardView;
    asked: number;
    liveCandidates: number;
}

/**
 * Build the two-card view for a question. `flipped` randomizes which side
 * option A lands on, so the better option never sits in a fixed position.
 */
export function questionView(
    q: ApiQuestion,
    progress: { asked: number; live_candidates: number },
    flipped: boolean,
): QuestionView {
    const a: CardView = { submits: "A", rows: q.optionA };
    const b: CardView = { submits: "B", rows: q.optionB };
    return {
        questionId: q.id,
        flipped,
        left: flipped ? b : a,
        right: flipped ? a : b,
        asked: progress.asked,
        liveCandidates: progress.live_candidates,
    };
}

export interface ResultRow {
    label: string;
    assignment: Record<string, string>;
    goals: Record<string, number>;
    valid: boolean;
}

export interface ResultView {
    rows: ResultRow[];
    goalNames: string[];
    interactions: number;
    evaluations: number;
}

export function resultView(doc: ResultDoc): ResultView {
    const goalNames = doc.selected.length ? Object.keys(doc.selected[0].goals) : [];
    return {
        rows: doc.selected.map((c, i) => ({
            label: i === 0 ? "best" : `#${i + 1}`,
            assignment: c.assignment,
            goals: c.goals,
            valid: c.valid,
        })),
        goalNames,
        interactions: doc.log.I,
        evaluations: doc.log.y_evaluations,
    };
}
