// The console proper: one live session, three zones (problem, input with a
// 1-5 confidence slider and a Hint button, transcript), and a read-only
// trace inspector behind a toggle. A single turn may be in flight at a time;
// the input row stays disabled until the tutor responds.

import { ApiRequestError, TutorApi } from "./api.js";
import type { TurnInput, TurnResponse } from "./api.js";
import {
  renderErrorBanner,
  renderInspectorEntry,
  renderProblem,
  renderStudentTurn,
  renderTutorTurn,
} from "./views.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class TutorConsole {
  private sessionId: string | null = null;
  private busy = false;

  private root!: HTMLElement;
  private problemZone!: HTMLElement;
  private transcript!: HTMLElement;
  private inspectorPanel!: HTMLElement;
  private answerInput!: HTMLInputElement;
  private confidenceSlider!: HTMLInputElement;
  private confidenceValue!: HTMLElement;
  private sendButton!: HTMLButtonElement;
  private hintButton!: HTMLButtonElement;
  private policySelect!: HTMLSelectElement;
  private scenarioSelect!: HTMLSelectElement;
  private startButton!: HTMLButtonElement;
  private fieldError!: HTMLElement;

  constructor(private api: TutorApi) {}

  mount(root: HTMLElement): void {
    this.root = root;
    root.replaceChildren();

    const controls = el("div", "controls");
    this.policySelect = el("select", "policy-select");
    for (const policy of ["es", "baseline"]) {
      const option = el("option", undefined, policy);
      option.value = policy;
      this.policySelect.appendChild(option);
    }
    this.scenarioSelect = el("select", "scenario-select");
    const freePractice = el("option", undefined, "free practice: fractions_add_like");
    freePractice.value = "";
    this.scenarioSelect.appendChild(freePractice);
    this.startButton = el("button", "start", "Start session");
    this.startButton.type = "button";
    this.startButton.addEventListener("click", () => void this.startSession());
    controls.append(
      el("label", undefined, "policy"),
      this.policySelect,
      el("label", undefined, "scenario"),
      this.scenarioSelect,
      this.startButton,
    );

    this.problemZone = el("div", "zone zone-problem");
    this.problemZone.appendChild(el("p", "placeholder", "Start a session to get a problem."));

    this.transcript = el("div", "zone zone-transcript");

    const inputZone = el("div", "zone zone-input");
    this.answerInput = el("input", "answer-input");
    this.answerInput.type = "text";
    this.answerInput.placeholder = "your answer";
    this.answerInput.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.submitAttempt();
    });
    this.confidenceSlider = el("input", "confidence-slider");
    this.confidenceSlider.type = "range";
    this.confidenceSlider.min = "1";
    this.confidenceSlider.max = "5";
    this.confidenceSlider.step = "1";
    this.confidenceSlider.value = "3";
    this.confidenceValue = el("span", "confidence-value", "3");
    this.confidenceSlider.addEventListener("input", () => {
      this.confidenceValue.textContent = this.confidenceSlider.value;
    });
    this.sendButton = el("button", "send", "Answer");
    this.sendButton.type = "button";
    this.sendButton.addEventListener("click", () => void this.submitAttempt());
    this.hintButton = el("button", "hint", "Hint");
    this.hintButton.type = "button";
    this.hintButton.addEventListener("click", () => void this.submitTurn({ kind: "hint_request" }));
    this.fieldError = el("span", "field-error");
    const confidenceWrap = el("label", "confidence-wrap", "confidence ");
    confidenceWrap.append(this.confidenceSlider, this.confidenceValue);
    inputZone.append(this.answerInput, confidenceWrap, this.sendButton, this.hintButton, this.fieldError);

    const inspectorToggle = el("button", "inspector-toggle", "Show trace inspector");
    inspectorToggle.type = "button";
    this.inspectorPanel = el("div", "zone zone-inspector");
    this.inspectorPanel.hidden = true;
    inspectorToggle.addEventListener("click", () => {
      this.inspectorPanel.hidden = !this.inspectorPanel.hidden;
      inspectorToggle.textContent = this.inspectorPanel.hidden
        ? "Show trace inspector"
        : "Hide trace inspector";
      if (!this.inspectorPanel.hidden) void this.refreshInspector();
    });

    root.append(controls, this.problemZone, this.transcript, inputZone, inspectorToggle, this.inspectorPanel);
    this.setInputEnabled(false);
    void this.loadScenarios();
  }

  private async loadScenarios(): Promise<void> {
    try {
      const scenarios = await this.api.scenarios();
      for (const scenario of scenarios) {
        const option = el(
          "option",
          undefined,
          `${scenario.scenario_id} (${scenario.signature}/${scenario.difficulty_tier})`,
        );
        option.value = scenario.scenario_id;
        this.scenarioSelect.appendChild(option);
      }
    } catch (error) {
      this.showError(error, () => void this.loadScenarios());
    }
  }

  async startSession(): Promise<void> {
    const policy = this.policySelect.value;
    const scenarioId = this.scenarioSelect.value || undefined;
    const skillId = scenarioId ? undefined : "fractions_add_like";
    try {
      const created = await this.api.createSession(policy, scenarioId, skillId);
      this.sessionId = created.session_id;
      this.transcript.replaceChildren();
      this.inspectorPanel.replaceChildren();
      this.problemZone.replaceChildren(renderProblem(created.problem));
      this.setInputEnabled(true);
    } catch (error) {
      this.showError(error, () => void this.startSession());
    }
  }

  async submitAttempt(): Promise<void> {
    await this.submitTurn({
      kind: "attempt",
      answer: this.answerInput.value,
      confidence: Number(this.confidenceSlider.value),
    });
  }

  async submitTurn(input: TurnInput): Promise<void> {
    if (this.sessionId === null || this.busy) return;
    this.busy = true;
    this.setInputEnabled(false);
    this.fieldError.textContent = "";
    const studentText = input.kind === "hint_request" ? "(asked for a hint)" : input.answer ?? input.text ?? "";
    try {
      const response = await this.api.submitTurn(this.sessionId, input);
      this.transcript.append(renderStudentTurn(studentText));
      this.appendTutorTurn(response);
      if (input.kind === "attempt") this.answerInput.value = "";
      if (response.problem !== undefined) {
        this.problemZone.replaceChildren(renderProblem(response.problem ?? null));
      }
      if (response.done) {
        this.problemZone.replaceChildren(renderProblem(null));
        this.sessionId = null;
      }
      if (!this.inspectorPanel.hidden) await this.refreshInspector();
    } catch (error) {
      if (error instanceof ApiRequestError && error.field) {
        this.fieldError.textContent = `${error.field}: ${error.message}`;
      } else {
        this.showError(error, () => void this.submitTurn(input));
      }
    } finally {
      this.busy = false;
      if (this.sessionId !== null) this.setInputEnabled(true);
    }
  }

  private appendTutorTurn(response: TurnResponse): void {
    this.transcript.append(
      renderTutorTurn({
        text: response.message,
        badges: response.badges,
        checks: response.constraint_checks,
        traceId: response.trace_id,
      }),
    );
    this.transcript.scrollTop = this.transcript.scrollHeight;
  }

  async refreshInspector(): Promise<void> {
    if (this.sessionId === null) return;
    try {
      const traces = await this.api.traces(this.sessionId);
      this.inspectorPanel.replaceChildren(...traces.map(renderInspectorEntry));
    } catch (error) {
      // panel-local failure; the chat stays usable
      this.inspectorPanel.replaceChildren(
        el("p", "inspector-error", `trace fetch failed: ${(error as Error).message}`),
      );
    }
  }

  private setInputEnabled(enabled: boolean): void {
    this.answerInput.disabled = !enabled;
    this.sendButton.disabled = !enabled;
    this.hintButton.disabled = !enabled;
    this.confidenceSlider.disabled = !enabled;
  }

  private showError(error: unknown, onRetry: () => void): void {
    const message = error instanceof Error ? error.message : "service unreachable";
    this.root.prepend(renderErrorBanner(message, onRetry));
  }
}
