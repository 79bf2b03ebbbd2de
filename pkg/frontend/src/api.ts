/** Typed client for the sigma16forge session API.
 *
 * Every successful call is appended to `log` with the raw response body
 * exactly as received, so a session can be replayed and any rendered
 * value traced back to the bytes the service sent.
 */

export interface Diagnostic {
  line: number;
  message: string;
}

export interface AssembleResponse {
  ok: boolean;
  errors: Diagnostic[];
  object_text: string | null;
  listing: string | null;
  symbols: Record<string, number>;
}

export interface EventView {
  kind: string;
  addr: number;
  text: string;
}

export type Mode = "emulator" | "m1";

export interface SessionInfo {
  id: string;
  mode: Mode;
  machine: string | null;
  program: string;
  counter: number;
  steps: number | null;
  cycle: number | null;
  pc: number;
  halted: boolean;
  breakpoints: number[];
  last_write: number | null;
}

export interface StepResponse {
  counter: number;
  steps: number | null;
  cycle: number | null;
  pc: number;
  halted: boolean;
  stopped: "halted" | "breakpoint" | "budget" | "stepped";
  events: EventView[];
  last_write: number | null;
}

export interface RegistersResponse {
  counter: number;
  registers: number[];
  pc: number;
  halted: boolean;
}

export interface MemoryResponse {
  counter: number;
  start: number;
  words: number[];
}

export interface CycleResponse {
  counter: number;
  cycle: number;
  state: string;
  signals: Record<string, number>;
  words: Record<string, number>;
  cnd: number;
  m_sto: number;
  text: string;
}

export interface PokeResponse {
  counter: number;
  addr: number;
  value: number;
}

export interface ApiRecord {
  method: string;
  path: string;
  status: number;
  body: string;
}

/** Service answered with an error status; detail comes from the body. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all (network-level failure). */
export class UnreachableError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${cause}`);
    this.name = "UnreachableError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly log: ApiRecord[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined
          ? undefined
          : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new UnreachableError(err);
    }
    const text = await res.text();
    if (!res.ok) {
      let detail = text;
      try {
        detail = JSON.stringify(JSON.parse(text).detail);
      } catch {
        /* body was not the usual {detail} shape; show it as is */
      }
      throw new ApiError(res.status, `${method} ${path}: ${detail}`);
    }
    this.log.push({ method, path, status: res.status, body: text });
    return (text === "" ? undefined : JSON.parse(text)) as T;
  }

  assemble(source: string, name = "main"): Promise<AssembleResponse> {
    return this.request("POST", "/api/assemble", { source, name });
  }

  createSession(
    mode: Mode,
    objectText: string,
    machine: "m1" | "m1x" = "m1",
  ): Promise<SessionInfo> {
    return this.request("POST", "/api/sessions", {
      mode,
      object_text: objectText,
      machine,
    });
  }

  getSession(sid: string): Promise<SessionInfo> {
    return this.request("GET", `/api/sessions/${sid}`);
  }

  step(sid: string, n = 1): Promise<StepResponse> {
    return this.request("POST", `/api/sessions/${sid}/step`, { n });
  }

  run(sid: string, budget = 10_000): Promise<StepResponse> {
    return this.request("POST", `/api/sessions/${sid}/run`, { budget });
  }

  setBreakpoint(sid: string, addr: number): Promise<SessionInfo> {
    return this.request("PUT", `/api/sessions/${sid}/breakpoints/${addr}`);
  }

  clearBreakpoint(sid: string, addr: number): Promise<SessionInfo> {
    return this.request("DELETE", `/api/sessions/${sid}/breakpoints/${addr}`);
  }

  registers(sid: string): Promise<RegistersResponse> {
    return this.request("GET", `/api/sessions/${sid}/registers`);
  }

  memory(sid: string, start: number, count: number): Promise<MemoryResponse> {
    return this.request(
      "GET",
      `/api/sessions/${sid}/memory?start=${start}&count=${count}`,
    );
  }

  cycle(sid: string): Promise<CycleResponse> {
    return this.request("GET", `/api/sessions/${sid}/cycle`);
  }

  poke(sid: string, addr: number, value: number): Promise<PokeResponse> {
    return this.request("POST", `/api/sessions/${sid}/poke`, { addr, value });
  }

  reset(sid: string): Promise<SessionInfo> {
    return this.request("POST", `/api/sessions/${sid}/reset`);
  }

  deleteSession(sid: string): Promise<void> {
    return this.request("DELETE", `/api/sessions/${sid}`);
  }
}
