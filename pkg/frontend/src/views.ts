// Pure DOM builders for the console. Nothing here decides anything: badges,
// chips, and inspector rows render server payloads verbatim, in server order.

import type { Badge, ConstraintCheck, ProblemView, TraceRecord } from "./api.js";

export function badgeLabel(action: string): string {
  return action === "DENY_HINT" ? "HINT DENIED" : action.replace(/_/g, " ");
}

export function renderBadges(badges: Badge[]): HTMLElement {
  const list = document.createElement("span");
  list.className = "badges";
  for (const badge of badges) {
    const el = document.createElement("span");
    el.className = `badge badge-${badge.action.toLowerCase()}`;
    el.dataset.agent = badge.agent;
    el.dataset.action = badge.action;
    el.title = badge.rationale;
    el.textContent = badgeLabel(badge.action);
    list.appendChild(el);
  }
  return list;
}

function chipState(check: ConstraintCheck): string {
  if (check.status === "violated_blocked") return "blocked";
  if (!check.passed) return "violated";
  return "pass";
}

export function renderConstraintChips(checks: ConstraintCheck[]): HTMLElement {
  const list = document.createElement("span");
  list.className = "chips";
  for (const check of checks) {
    const el = document.createElement("span");
    const state = chipState(check);
    el.className = `chip chip-${state}`;
    el.dataset.constraint = check.name;
    el.dataset.state = state;
    el.textContent = `${check.name}: ${state}`;
    list.appendChild(el);
  }
  return list;
}

export function renderStudentTurn(text: string): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = "turn turn-student";
  const speaker = document.createElement("span");
  speaker.className = "speaker";
  speaker.textContent = "you";
  const body = document.createElement("p");
  body.textContent = text;
  bubble.append(speaker, body);
  return bubble;
}

export interface TutorTurnView {
  text: string;
  badges: Badge[];
  checks: ConstraintCheck[];
  traceId: string;
}

export function renderTutorTurn(view: TutorTurnView): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = "turn turn-tutor";
  bubble.dataset.traceId = view.traceId;
  const speaker = document.createElement("span");
  speaker.className = "speaker";
  speaker.textContent = "tutor";
  const body = document.createElement("p");
  body.textContent = view.text;
  bubble.append(speaker, renderBadges(view.badges), body, renderConstraintChips(view.checks));
  return bubble;
}

export function renderProblem(problem: ProblemView | null): HTMLElement {
  const panel = document.createElement("div");
  panel.className = "problem";
  if (problem === null) {
    panel.textContent = "Session complete — every problem is done.";
    panel.classList.add("problem-done");
    return panel;
  }
  const counter = document.createElement("span");
  counter.className = "problem-counter";
  counter.textContent = `Problem ${problem.index + 1} of ${problem.total} · ${problem.skill_id}`;
  const prompt = document.createElement("p");
  prompt.className = "problem-prompt";
  prompt.textContent = problem.prompt;
  panel.append(counter, prompt);
  return panel;
}

export function renderInspectorEntry(trace: TraceRecord): HTMLElement {
  const entry = document.createElement("details");
  entry.className = "inspector-entry";
  const summary = document.createElement("summary");
  const studentText = trace.student_input.answer ?? trace.student_input.text ?? trace.student_input.kind;
  summary.textContent = `turn ${trace.turn_index}: ${trace.student_input.kind} "${studentText}"`;
  entry.appendChild(summary);

  const proposals = document.createElement("ul");
  proposals.className = "inspector-proposals";
  for (const proposal of trace.proposals) {
    const row = document.createElement("li");
    row.textContent = `${proposal.agent} proposed ${proposal.action} (${proposal.rationale_key})`;
    proposals.appendChild(row);
  }
  for (const suppressed of trace.decision.suppressed) {
    const row = document.createElement("li");
    row.className = "inspector-suppressed";
    row.textContent = `${suppressed.proposal.action} suppressed: ${suppressed.reason}`;
    proposals.appendChild(row);
  }
  entry.appendChild(proposals);

  const checks = document.createElement("ul");
  checks.className = "inspector-checks";
  for (const check of trace.decision.constraint_checks) {
    const row = document.createElement("li");
    row.textContent = `${check.name}: ${check.status}`;
    checks.appendChild(row);
  }
  entry.appendChild(checks);

  const meta = document.createElement("p");
  meta.className = "inspector-meta";
  meta.textContent =
    `renderer ${trace.renderer_mode} · prompt ${trace.prompt_token_count} tokens · ` +
    `completion ${trace.completion_token_count} tokens`;
  entry.appendChild(meta);
  return entry;
}

export function renderErrorBanner(message: string, onRetry: () => void): HTMLElement {
  const banner = document.createElement("div");
  banner.className = "error-banner";
  const text = document.createElement("span");
  text.textContent = message;
  const retry = document.createElement("button");
  retry.type = "button";
  retry.className = "retry";
  retry.textContent = "Retry";
  retry.addEventListener("click", () => {
    banner.remove();
    onRetry();
  });
  banner.append(text, retry);
  return banner;
}
