import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";

/** Scripted stand-in for the service: canned bodies, no machine
 * semantics. Tracks calls and concurrency so queueing can be asserted.
 */
class FakeService {
  counter = 0;
  nextSid = 0;
  sid: string | null = null;
  steps = 0;
  breakpoints: number[] = [];
  calls: string[] = [];
  concurrent = 0;
  maxConcurrent = 0;
  failNetwork = false;
  memoryCounterOverride: number | null = null;

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.concurrent += 1;
    this.maxConcurrent = Math.max(this.maxConcurrent, this.concurrent);
    await new Promise((resolve) => setTimeout(resolve, 1));
    try {
      if (this.failNetwork) {
        throw new TypeError("fetch failed");
      }
      return this.route(method, url, body);
    } finally {
      this.concurrent -= 1;
    }
  };

  private json(obj: unknown, status = 200): Response {
    return new Response(JSON.stringify(obj), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  private info() {
    return {
      id: this.sid,
      mode: "emulator",
      machine: null,
      program: "fake",
      counter: this.counter,
      steps: this.steps,
      cycle: null,
      pc: this.steps,
      halted: false,
      breakpoints: [...this.breakpoints],
      last_write: null,
    };
  }

  private route(method: string, url: string, body?: any): Response {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    this.calls.push(`${method} ${path}`);
    if (method === "POST" && path === "/api/assemble") {
      if ((body.source as string).includes("oops")) {
        return this.json({
          ok: false,
          errors: [{ line: 1, message: "syntax error" }],
          object_text: null,
          listing: null,
          symbols: {},
        });
      }
      return this.json({
        ok: true,
        errors: [],
        object_text: "fake-object",
        listing: "",
        symbols: { done: 30, arr: 32 },
      });
    }
    if (method === "POST" && path === "/api/sessions") {
      this.nextSid += 1;
      this.sid = `s${this.nextSid}`;
      this.counter = 0;
      this.steps = 0;
      this.breakpoints = [];
      return this.json(this.info(), 201);
    }
    if (method === "DELETE" && /^\/api\/sessions\/s\d+$/.test(path)) {
      return new Response(null, { status: 204 });
    }
    const m = path.match(/^\/api\/sessions\/(s\d+)(\/.*)$/);
    if (!m || m[1] !== this.sid) {
      return this.json({ detail: "no such session" }, 404);
    }
    const rest = m[2];
    if (method === "POST" && rest === "/step") {
      this.steps += body.n;
      this.counter += 1;
      return this.json({
        counter: this.counter,
        steps: this.steps,
        cycle: null,
        pc: this.steps,
        halted: false,
        stopped: "stepped",
        events: [{ kind: "exec", addr: this.steps - 1,
                   text: `exec ${this.steps}` }],
        last_write: null,
      });
    }
    if (method === "GET" && rest === "/registers") {
      return this.json({
        counter: this.counter,
        registers: Array(16).fill(this.steps),
        pc: this.steps,
        halted: false,
      });
    }
    if (method === "GET" && rest.startsWith("/memory")) {
      const params = new URLSearchParams(rest.split("?")[1]);
      const start = Number(params.get("start"));
      const count = Number(params.get("count"));
      return this.json({
        counter: this.memoryCounterOverride ?? this.counter,
        start,
        words: Array(count).fill(0xc000 + this.steps),
      });
    }
    const bp = rest.match(/^\/breakpoints\/(\d+)$/);
    if (bp && method === "PUT") {
      this.breakpoints.push(Number(bp[1]));
      this.counter += 1;
      return this.json(this.info());
    }
    if (bp && method === "DELETE") {
      this.breakpoints = this.breakpoints.filter(
        (a) => a !== Number(bp[1]),
      );
      this.counter += 1;
      return this.json(this.info());
    }
    return this.json({ detail: `unhandled ${method} ${rest}` }, 500);
  }
}

let fake: FakeService;
let app: App;

function click(id: string): void {
  (document.getElementById(id) as HTMLButtonElement).click();
}

function text(id: string): string {
  return document.getElementById(id)?.textContent ?? "";
}

function newApp(confirmAnswer = true): App {
  document.body.innerHTML = '<div id="app"></div>';
  return new App(
    document.getElementById("app") as HTMLElement,
    new ApiClient("", fake.fetch),
    () => confirmAnswer,
  );
}

beforeEach(() => {
  fake = new FakeService();
});

describe("action queue", () => {
  it("serializes the calls within one action", async () => {
    app = newApp();
    click("assemble");
    await app.idle();
    expect(fake.maxConcurrent).toBe(1);
    expect(fake.calls.length).toBeGreaterThanOrEqual(4);
  });

  it("serializes actions queued in the same tick", async () => {
    app = newApp();
    click("assemble");
    await app.idle();
    const memMode = document.getElementById("mem-mode") as HTMLSelectElement;
    memMode.value = "manual";
    memMode.dispatchEvent(new Event("change"));
    click("step");
    await app.idle();
    expect(fake.maxConcurrent).toBe(1);
    expect(fake.calls.filter((c) => c.endsWith("/step"))).toHaveLength(1);
    expect(text("progress")).toBe("steps 1");
  });

  it("ignores clicks while a call is in flight", async () => {
    app = newApp();
    click("assemble");
    click("step");
    await app.idle();
    expect(fake.calls.filter((c) => c.endsWith("/step"))).toHaveLength(0);
    click("step");
    await app.idle();
    expect(text("progress")).toBe("steps 1");
  });

  it("refreshes registers and memory after each step", async () => {
    app = newApp();
    click("assemble");
    await app.idle();
    click("step");
    await app.idle();
    expect(text("reg-0")).toBe("0001");
    expect(text("mem-0")).toBe("c001");
    expect(text("progress")).toBe("steps 1");
  });
});

describe("staleness", () => {
  it("drops a memory response carrying an old counter", async () => {
    app = newApp();
    click("assemble");
    await app.idle();
    expect(text("mem-0")).toBe("c000");
    fake.memoryCounterOverride = 0;
    click("step");
    await app.idle();
    expect(text("reg-0")).toBe("0001");
    expect(text("mem-0")).toBe("c000");
  });
});

describe("service unreachable", () => {
  it("shows the banner and freezes the last known values", async () => {
    app = newApp();
    click("assemble");
    await app.idle();
    click("step");
    await app.idle();
    expect(text("reg-0")).toBe("0001");
    fake.failNetwork = true;
    click("step");
    await app.idle();
    const banner = document.getElementById("banner") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(text("reg-0")).toBe("0001");
    expect(text("mem-0")).toBe("c001");
    fake.failNetwork = false;
    click("step");
    await app.idle();
    expect(banner.hidden).toBe(true);
    expect(text("reg-0")).toBe("0002");
  });
});

describe("assemble flow", () => {
  it("shows diagnostics and creates no session on errors", async () => {
    app = newApp();
    (document.getElementById("source") as HTMLTextAreaElement).value =
      "oops R1";
    click("assemble");
    await app.idle();
    expect(text("diagnostics")).toContain("line 1: syntax error");
    expect(fake.calls.some((c) => c === "POST /api/sessions")).toBe(false);
    expect((document.getElementById("step") as HTMLButtonElement).disabled)
      .toBe(true);
  });

  it("asks before replacing a session that has made progress", async () => {
    app = newApp(false);
    click("assemble");
    await app.idle();
    click("step");
    await app.idle();
    const before = fake.calls.length;
    click("assemble");
    await app.idle();
    expect(app.view.sessionId).toBe("s1");
    expect(fake.calls.slice(before)).toEqual(["POST /api/assemble"]);
  });

  it("replaces the session after confirmation", async () => {
    app = newApp(true);
    click("assemble");
    await app.idle();
    click("step");
    await app.idle();
    click("assemble");
    await app.idle();
    expect(fake.calls).toContain("DELETE /api/sessions/s1");
    expect(app.view.sessionId).toBe("s2");
    expect(text("reg-0")).toBe("0000");
  });

  it("does not prompt when the session has not advanced", async () => {
    let asked = 0;
    document.body.innerHTML = '<div id="app"></div>';
    app = new App(
      document.getElementById("app") as HTMLElement,
      new ApiClient("", fake.fetch),
      () => {
        asked += 1;
        return true;
      },
    );
    click("assemble");
    await app.idle();
    click("assemble");
    await app.idle();
    expect(asked).toBe(0);
    expect(app.view.sessionId).toBe("s2");
  });
});

describe("breakpoints", () => {
  it("resolves labels from the assembler symbols", async () => {
    app = newApp();
    click("assemble");
    await app.idle();
    (document.getElementById("bp-addr") as HTMLInputElement).value = "done";
    click("bp-set");
    await app.idle();
    expect(fake.calls).toContain("PUT /api/sessions/s1/breakpoints/30");
    expect(text("breakpoints")).toContain("001e");
  });

  it("clears a breakpoint from its chip button", async () => {
    app = newApp();
    click("assemble");
    await app.idle();
    (document.getElementById("bp-addr") as HTMLInputElement).value = "$1f";
    click("bp-set");
    await app.idle();
    const chip = document.querySelector(
      "#breakpoints button",
    ) as HTMLButtonElement;
    chip.click();
    await app.idle();
    expect(fake.calls).toContain("DELETE /api/sessions/s1/breakpoints/31");
    expect(document.querySelectorAll("#breakpoints li")).toHaveLength(0);
  });
});
