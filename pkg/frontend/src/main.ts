import { ApiClient } from "./client.js";
import { SessionFlow } from "./flow.js";
import { QuestionView, ResultView } from "./render.js";

const api = new ApiClient("");
let flow: SessionFlow | null = null;

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

function show(id: string, visible: boolean): void {
    el(id).style.display = visible ? "" : "none";
}

async function loadModels(): Promise<void> {
    const doc = await api.listModels();
    const select = el<HTMLSelectElement>("model-select");
    select.innerHTML = "";
    for (const m of doc.models) {
        const opt = document.createElement("option");
        opt.value = m.id;
        opt.textContent = `${m.id} (${m.kind})`;
        select.appendChild(opt);
    }
}

function renderCard(container: HTMLElement, view: QuestionView, side: "left" | "right"): void {
    const card = side === "left" ? view.left : view.right;
    container.innerHTML = "";
    const list = document.createElement("dl");
    for (const row of card.rows) {
        const dt = document.createElement("dt");
        dt.textContent = row.attr;
        const dd = document.createElement("dd");
        dd.textContent = row.value;
        list.appendChild(dt);
        list.appendChild(dd);
    }
    container.appendChild(list);
}

function onQuestion(view: QuestionView): void {
    show("question-panel", true);
    show("result-panel", false);
    el("banner").textContent = "";
    el("progress").textContent =
        `question ${view.asked + 1} - ${view.liveCandidates} candidates remain`;
    renderCard(el("card-left"), view, "left");
    renderCard(el("card-right"), view, "right");
    setCardsEnabled(true);
}

function setCardsEnabled(enabled: boolean): void {
    el<HTMLButtonElement>("pick-left").disabled = !enabled;
    el<HTMLButtonElement>("pick-right").disabled = !enabled;
}

function onResult(view: ResultView): void {
    show("question-panel", false);
    show("result-panel", true);
    el("summary").textContent =
        `${view.rows.length} solutions after ${view.interactions} questions ` +
        `(${view.evaluations} evaluations)`;
    const table = el<HTMLTableElement>("result-table");
    table.innerHTML = "";
    const head = table.insertRow();
    for (const h of ["", ...view.goalNames, "configuration"]) {
        const cell = document.createElement("th");
        cell.textContent = h;
        head.appendChild(cell);
    }
    for (const row of view.rows) {
        const tr = table.insertRow();
        tr.insertCell().textContent = row.label;
        for (const g of view.goalNames) {
            tr.insertCell().textContent = row.goals[g].toFixed(2);
        }
        const chosen = Object.entries(row.assignment)
            .filter(([, v]) => v !== "false")
            .map(([k, v]) => (v === "true" ? k : `${k}=${v}`))
            .join(", ");
        tr.insertCell().textContent = chosen;
    }
}

function setupRating(): void {
    const holder = el("rating");
    holder.innerHTML = "";
    for (let score = 0; score <= 5; score++) {
        const btn = document.createElement("button");
        btn.textContent = String(score);
        btn.onclick = async () => {
            if (flow && (await flow.rate(score))) {
                el("rating-status").textContent = `rated ${score}/5 - thanks`;
            }
        };
        holder.appendChild(btn);
    }
}

async function startSession(): Promise<void> {
    const modelId = el<HTMLSelectElement>("model-select").value;
    const seed = parseInt(el<HTMLInputElement>("seed-input").value || "0", 10);
    show("picker-panel", false);
    show("question-panel", true);
    el("progress").textContent = "starting session (enumerating candidates)...";
    flow = new SessionFlow(api, {
        onQuestion,
        onResult: (v) => {
            onResult(v);
            setupRating();
        },
        onAborted: (msg) => {
            el("banner").textContent = `session ended: ${msg}`;
        },
        onRetry: (msg) => {
            el("banner").textContent = `connection trouble, retrying... (${msg})`;
        },
    });
    await flow.start(modelId, seed);
}

window.addEventListener("DOMContentLoaded", () => {
    loadModels().catch((e) => (el("banner").textContent = `cannot load models: ${e}`));
    el("start-btn").onclick = () => void startSession();
    el("pick-left").onclick = () => {
        setCardsEnabled(false);
        void flow?.choose("left");
    };
    el("pick-right").onclick = () => {
        setCardsEnabled(false);
        void flow?.choose("right");
    };
});
