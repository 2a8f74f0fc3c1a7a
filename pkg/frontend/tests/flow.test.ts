import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/client.js";
import { SessionFlow } from "../src/flow.js";
import { QuestionView, ResultView, questionView } from "../src/render.js";
import { ApiQuestion, ResultDoc, StatusDoc } from "../src/types.js";

function makeQuestion(id: number, nAttrs: number): ApiQuestion {
    const rows = (side: string) =>
        Array.from({ length: nAttrs }, (_, k) => ({
            attr: `f${id}_${k}`,
            value: side,
        }));
    return { id, optionA: rows("true"), optionB: rows("false") };
}

/** Scripted server replaying a fixed 5-question session. */
class MockServer {
    questions = [6, 6, 5, 6, 2].map((n, i) => makeQuestion(i, n));
    next = 0;
    acceptedAnswers: Array<{ id: number; choice: string }> = [];
    answerAttempts = 0;
    ratings: number[] = [];
    injectConflictAt: number; // answer attempt index that gets a bogus 409
    conflictInjected = false;

    constructor(injectConflictAt = 2) {
        this.injectConflictAt = injectConflictAt;
    }

    private json(body: unknown, status = 200): Response {
        return new Response(JSON.stringify(body), {
            status,
            headers: { "content-type": "application/json" },
        });
    }

    private statusDoc(): StatusDoc {
        if (this.next >= this.questions.length) {
            return { state: "done", progress: { asked: 5, live_candidates: 9 } };
        }
        return {
            state: "awaiting_answer",
            question: this.questions[this.next],
            progress: { asked: this.next, live_candidates: 100 >> this.next },
        };
    }

    private resultDoc(): ResultDoc {
        return {
            selected: [
                {
                    index: 3,
                    assignment: { f0_0: "true", f1_0: "false" },
                    goals: { effort: 10.5, cost: 2.0 },
                    valid: true,
                },
                {
                    index: 8,
                    assignment: { f0_0: "false", f1_0: "false" },
                    goals: { effort: 12.5, cost: 3.0 },
                    valid: true,
                },
            ],
            best: {
                index: 3,
                assignment: { f0_0: "true", f1_0: "false" },
                goals: { effort: 10.5, cost: 2.0 },
                valid: true,
            },
            log: { I: 5, sizes: [6, 6, 5, 6, 2], y_evaluations: 14 },
            seed: 1,
            ratings: this.ratings,
        };
    }

    fetch = async (url: string, init?: RequestInit): Promise<Response> => {
        const method = init?.method ?? "GET";
        if (url.endsWith("/api/v1/sessions") && method === "POST") {
            return this.json({ session_id: "mock1" });
        }
        if (url.endsWith("/sessions/mock1") && method === "GET") {
            return this.json(this.statusDoc());
        }
        if (url.endsWith("/sessions/mock1/answer") && method === "POST") {
            const body = JSON.parse(String(init?.body));
            const attempt = this.answerAttempts++;
            if (attempt === this.injectConflictAt && !this.conflictInjected) {
                this.conflictInjected = true;
                return this.json({ detail: "injected conflict" }, 409);
            }
            const pending = this.questions[this.next];
            if (!pending || body.question_id !== pending.id) {
                return this.json({ detail: "not awaiting that question" }, 409);
            }
            this.acceptedAnswers.push({ id: body.question_id, choice: body.choice });
            this.next++;
            return this.json({ accepted: true, question_id: body.question_id });
        }
        if (url.endsWith("/sessions/mock1/result") && method === "GET") {
            if (this.next < this.questions.length) {
                return this.json({ detail: "not done" }, 404);
            }
            return this.json(this.resultDoc());
        }
        if (url.endsWith("/sessions/mock1/rating") && method === "POST") {
            const body = JSON.parse(String(init?.body));
            this.ratings.push(body.score);
            return this.json({ accepted: true, ratings: this.ratings });
        }
        return this.json({ detail: `no route ${method} ${url}` }, 404);
    };
}

interface DriveOutcome {
    result: ResultView;
    renderedQuestions: QuestionView[];
    retries: string[];
}

async function driveFlow(
    server: MockServer,
    opts: { doubleClick?: boolean; flip?: () => number } = {},
): Promise<{ flow: SessionFlow; outcome: DriveOutcome }> {
    const api = new ApiClient("", server.fetch);
    const rendered: QuestionView[] = [];
    const retries: string[] = [];
    let resolveDone: (v: ResultView) => void;
    const done = new Promise<ResultView>((r) => (resolveDone = r));
    const flow: SessionFlow = new SessionFlow(
        api,
        {
            onQuestion: (view) => {
                rendered.push(view);
                void flow.choose("left");
                if (opts.doubleClick) {
                    void flow.choose("left"); // must not double-post
                }
            },
            onResult: (view) => resolveDone(view),
            onAborted: (msg) => {
                throw new Error(`aborted: ${msg}`);
            },
            onRetry: (msg) => retries.push(msg),
        },
        { pollMs: 1, flipRng: opts.flip ?? (() => 0.9) },
    );
    await flow.start("demo", 1);
    const result = await done;
    return { flow, outcome: { result, renderedQuestions: rendered, retries } };
}

describe("session flow against a scripted 5-question server", () => {
    it("completes the flow with exactly 5 accepted answers and 1 rating", async () => {
        const server = new MockServer();
        const { flow, outcome } = await driveFlow(server, { doubleClick: true });

        expect(server.acceptedAnswers.length).toBe(5);
        expect(flow.answeredCount()).toBe(5);
        // the injected conflict costs exactly one extra attempt
        expect(server.answerAttempts).toBe(6);
        expect(server.conflictInjected).toBe(true);

        await flow.rate(4);
        await flow.rate(5); // second rating must be dropped client-side
        expect(server.ratings).toEqual([4]);

        expect(outcome.result.rows.length).toBe(2);
        expect(outcome.result.interactions).toBe(5);
    });

    it("never renders more than six rows per card", async () => {
        const server = new MockServer();
        const { outcome } = await driveFlow(server);
        for (const view of outcome.renderedQuestions) {
            expect(view.left.rows.length).toBeLessThanOrEqual(6);
            expect(view.right.rows.length).toBeLessThanOrEqual(6);
            expect(view.left.rows.length).toBe(view.right.rows.length);
        }
    });

    it("only renders the server's pending question id", async () => {
        const server = new MockServer();
        const { outcome } = await driveFlow(server);
        const ids = outcome.renderedQuestions.map((v) => v.questionId);
        for (const accepted of server.acceptedAnswers) {
            expect(ids).toContain(accepted.id);
        }
    });

    it("randomized placement still submits the clicked card's option", async () => {
        // force every question flipped: option B sits on the left
        const server = new MockServer(999); // no injected conflict
        await driveFlow(server, { flip: () => 0.1 });
        expect(server.acceptedAnswers.map((a) => a.choice)).toEqual(["B", "B", "B", "B", "B"]);

        const straight = new MockServer(999);
        await driveFlow(straight, { flip: () => 0.9 });
        expect(straight.acceptedAnswers.map((a) => a.choice)).toEqual(["A", "A", "A", "A", "A"]);
    });

    it("keeps polling through transient network failures without duplicates", async () => {
        const server = new MockServer(999);
        let failures = 3;
        const flaky = async (url: string, init?: RequestInit): Promise<Response> => {
            if (url.endsWith("/sessions/mock1") && failures > 0) {
                failures--;
                throw new TypeError("network down");
            }
            return server.fetch(url, init);
        };
        const api = new ApiClient("", flaky);
        const retries: string[] = [];
        let resolveDone: (v: ResultView) => void;
        const done = new Promise<ResultView>((r) => (resolveDone = r));
        const flow: SessionFlow = new SessionFlow(
            api,
            {
                onQuestion: () => void flow.choose("right"),
                onResult: (v) => resolveDone(v),
                onAborted: () => undefined,
                onRetry: (m) => retries.push(m),
            },
            { pollMs: 1, flipRng: () => 0.0 },
        );
        await flow.start("demo", 1);
        await done;
        expect(retries.length).toBe(3);
        expect(server.acceptedAnswers.length).toBe(5);
        expect(server.answerAttempts).toBe(5); // no duplicate posts
    });
});

describe("question view construction", () => {
    it("maps options onto cards per the flip flag", () => {
        const q = makeQuestion(7, 3);
        const plain = questionView(q, { asked: 2, live_candidates: 50 }, false);
        expect(plain.left.submits).toBe("A");
        expect(plain.right.submits).toBe("B");
        const flipped = questionView(q, { asked: 2, live_candidates: 50 }, true);
        expect(flipped.left.submits).toBe("B");
        expect(flipped.left.rows[0].value).toBe("false");
        expect(flipped.questionId).toBe(7);
    });
});
