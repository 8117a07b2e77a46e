// Line protocol: one JSON object per line, UTF-8, no pretty-printing.
// Request:  {"id":int,"source":str,"prompt":str,"prefix":[str],"allowed":[str]}
// Response: {"id":int,"logprobs":[float]}   (one finite value per allowed token)
// Error:    {"id":int,"error":str}          (id -1 when the line was unparseable)
//
// The bridge only scores; it never selects a token, so nothing outside the
// request's allowed set can ever reach the decoder. Responses are written in
// request order, one per line, and a failed request never ends the session.

export interface ScoreRequest {
  id: number;
  source: string;
  prompt: string;
  prefix: string[];
  allowed: string[];
}

export interface ScoreResponse {
  id: number;
  logprobs: number[];
}

export interface ErrorResponse {
  id: number;
  error: string;
}

/** The pluggable model handle: map a request to one logprob per allowed token. */
export interface Model {
  readonly name: string;
  score(request: ScoreRequest): number[];
}

export interface SessionState {
  lastId: number;
}

export function newSession(): SessionState {
  return { lastId: -1 };
}

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((x) => typeof x === "string");
}

function validate(value: unknown): ScoreRequest | string {
  if (typeof value !== "object" || value === null) return "request must be a JSON object";
  const req = value as Record<string, unknown>;
  if (!Number.isInteger(req.id)) return "missing integer 'id'";
  if (typeof req.source !== "string") return "missing string 'source'";
  if (typeof req.prompt !== "string") return "missing string 'prompt'";
  if (!isStringArray(req.prefix)) return "'prefix' must be an array of strings";
  if (!isStringArray(req.allowed)) return "'allowed' must be an array of strings";
  if (req.allowed.length === 0) return "'allowed' must be non-empty";
  return req as unknown as ScoreRequest;
}

/** Handle one raw input line; always returns exactly one response object. */
export function handleLine(
  raw: string,
  model: Model,
  state: SessionState,
): ScoreResponse | ErrorResponse {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return { id: -1, error: "malformed JSON line" };
  }
  const reqOrError = validate(parsed);
  if (typeof reqOrError === "string") {
    const id = Number.isInteger((parsed as Record<string, unknown>)?.id)
      ? ((parsed as Record<string, unknown>).id as number)
      : -1;
    return { id, error: reqOrError };
  }
  const request = reqOrError;
  if (request.id <= state.lastId) {
    return { id: request.id, error: `id must increase (last was ${state.lastId})` };
  }
  state.lastId = request.id;
  let logprobs: number[];
  try {
    logprobs = model.score(request);
  } catch (err) {
    return { id: request.id, error: `model failure: ${String(err)}` };
  }
  if (logprobs.length !== request.allowed.length) {
    return {
      id: request.id,
      error: `model returned ${logprobs.length} scores for ${request.allowed.length} tokens`,
    };
  }
  if (!logprobs.every((x) => Number.isFinite(x))) {
    return { id: request.id, error: "model returned a non-finite logprob" };
  }
  return { id: request.id, logprobs };
}

export function encode(response: ScoreResponse | ErrorResponse): string {
  return JSON.stringify(response) + "\n";
}
