// Typed client for the /api/v1 session endpoints. The console sends only
// {kind, answer, confidence, text} plus session ids; every pedagogical fact
// it displays comes back from the server.

export interface Badge {
  agent: string;
  action: string;
  rationale: string;
}

export interface ConstraintCheck {
  name: string;
  passed: boolean;
  status: string;
  detail: Record<string, unknown>;
}

export interface ProblemView {
  problem_id: string;
  prompt: string;
  skill_id: string;
  index: number;
  total: number;
}

export interface SessionCreated {
  session_id: string;
  policy: string;
  problem: ProblemView | null;
}

export interface TurnInput {
  kind: "attempt" | "hint_request" | "chat";
  answer?: string;
  confidence?: number;
  text?: string;
}

export interface TurnResponse {
  message: string;
  badges: Badge[];
  constraint_checks: ConstraintCheck[];
  trace_id: string;
  renderer_mode: string;
  done: boolean;
  problem?: ProblemView | null;
}

export interface ProposalRecord {
  agent: string;
  action: string;
  rationale_key: string;
  params: Record<string, unknown>;
}

export interface TraceRecord {
  turn_index: number;
  session_id: string;
  student_input: { kind: string; answer?: string | null; text?: string | null };
  proposals: ProposalRecord[];
  decision: {
    actions: ProposalRecord[];
    suppressed: { proposal: ProposalRecord; reason: string }[];
    constraint_checks: ConstraintCheck[];
  };
  rendered_text: string;
  renderer_mode: string;
  prompt_token_count: number;
  completion_token_count: number;
}

export interface ScenarioSummary {
  scenario_id: string;
  signature: string;
  difficulty_tier: string;
  skill_id: string;
  description: string;
}

export class ApiRequestError extends Error {
  code: string;
  field?: string;
  status: number;

  constructor(status: number, code: string, message: string, field?: string) {
    super(message);
    this.status = status;
    this.code = code;
    this.field = field;
  }
}

async function parseError(response: Response): Promise<ApiRequestError> {
  let code = "http_error";
  let message = `request failed with status ${response.status}`;
  let field: string | undefined;
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      code = body.code ?? code;
      message = body.message ?? message;
      field = body.field ?? undefined;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiRequestError(response.status, code, message, field);
}

export class TutorApi {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}/api/v1${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  createSession(policy: string, scenarioId?: string, skillId?: string): Promise<SessionCreated> {
    return this.request<SessionCreated>("/sessions", {
      method: "POST",
      body: JSON.stringify({
        policy,
        scenario_id: scenarioId ?? null,
        skill_id: skillId ?? null,
      }),
    });
  }

  submitTurn(sessionId: string, input: TurnInput): Promise<TurnResponse> {
    return this.request<TurnResponse>(`/sessions/${sessionId}/turns`, {
      method: "POST",
      body: JSON.stringify(input),
    });
  }

  traces(sessionId: string): Promise<TraceRecord[]> {
    return this.request<TraceRecord[]>(`/sessions/${sessionId}/traces`);
  }

  scenarios(): Promise<ScenarioSummary[]> {
    return this.request<ScenarioSummary[]>("/scenarios");
  }
}
