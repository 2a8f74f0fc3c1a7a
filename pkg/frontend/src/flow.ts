import { ApiClient, ApiError } from "./client.js";
import { QuestionView, ResultView, questionView, resultView } from "./render.js";
import { StatusDoc } from "./types.js";

export interface FlowEvents {
    onQuestion(view: QuestionView): void;
    onResult(view: ResultView): void;
    onAborted(message: string): void;
    onRetry(message: string): void; // transient network trouble
    onIdle?(): void; // nothing pending; waiting on the server
}

/**
 * Drives one session: poll the server, surface questions, forward answers.
 *
 * Client-side idempotence: an answer is posted at most once per question id
 * (double clicks and stale renders are dropped), and a conflict response
 * triggers a state refetch instead of a blind retry.
 */
export class SessionFlow {
    private sessionId = "";
    private answeredIds = new Set<number>();
    private inFlight = false;
    private flipRng: () => number;
    private pollMs: number;
    private stopped = false;
    private currentQuestion: QuestionView | null = null;
    private flipByQuestion = new Map<number, boolean>();
    private ratingPosted = false;

    constructor(
        private api: ApiClient,
        private events: FlowEvents,
        opts: { pollMs?: number; flipRng?: () => number } = {},
    ) {
        this.pollMs = opts.pollMs ?? 300;
        this.flipRng = opts.flipRng ?? Math.random;
    }

    get id(): string {
        return this.sessionId;
    }

    async start(modelId: string, seed: number, poolSize?: number): Promise<void> {
        const created = await this.api.createSession(modelId, seed, poolSize);
        this.sessionId = created.session_id;
        await this.pollLoop();
    }

    stop(): void {
        this.stopped = true;
    }

    private async pollLoop(): Promise<void> {
        while (!this.stopped) {
            let status: StatusDoc;
            try {
                status = await this.api.status(this.sessionId);
            } catch (e) {
                if (e instanceof ApiError && e.status === 404) {
                    this.events.onAborted("session expired or unknown");
                    return;
                }
                this.events.onRetry(String(e));
                await sleep(this.pollMs);
                continue;
            }
            if (status.state === "done") {
                const doc = await this.api.result(this.sessionId);
                this.events.onResult(resultView(doc));
                return;
            }
            if (status.state === "aborted") {
                this.events.onAborted(status.error ?? "session aborted");
                return;
            }
            if (status.state === "awaiting_answer" && status.question) {
                const q = status.question;
                if (!this.answeredIds.has(q.id)) {
                    if (!this.flipByQuestion.has(q.id)) {
                        this.flipByQuestion.set(q.id, this.flipRng() < 0.5);
                    }
                    this.currentQuestion = questionView(
                        q,
                        status.progress,
                        this.flipByQuestion.get(q.id)!,
                    );
                    this.events.onQuestion(this.currentQuestion);
                }
            } else {
                this.events.onIdle?.();
            }
            await sleep(this.pollMs);
        }
    }

    /** Handle a click on the left or right card. */
    async choose(side: "left" | "right"): Promise<void> {
        const view = this.currentQuestion;
        if (view === null || this.inFlight || this.answeredIds.has(view.questionId)) {
            return; // no pending question, or a duplicate click
        }
        const choice = side === "left" ? view.left.submits : view.right.submits;
        this.inFlight = true;
        try {
            await this.api.answer(this.sessionId, view.questionId, choice);
            this.answeredIds.add(view.questionId);
            this.currentQuestion = null;
        } catch (e) {
            if (e instanceof ApiError && e.status === 409) {
                // someone answered first or the engine moved on; resync
                this.currentQuestion = null;
            } else {
                this.events.onRetry(String(e));
            }
        } finally {
            this.inFlight = false;
        }
    }

    /** Post a 0..5 rating for the displayed solutions (once per session). */
    async rate(score: number): Promise<boolean> {
        if (this.ratingPosted || !Number.isInteger(score) || score < 0 || score > 5) {
            return false;
        }
        await this.api.rate(this.sessionId, score);
        this.ratingPosted = true;
        return true;
    }

    answeredCount(): number {
        return this.answeredIds.size;
    }
}

function sleep(ms: number): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, ms));
}
