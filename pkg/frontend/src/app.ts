/** Controller wiring the API client, the view model, and the DOM.
 *
 * All service traffic goes through a single promise chain, so at most
 * one API call is in flight at a time and responses are applied in
 * order; the staleness gate in the view model drops anything that
 * arrives with an outdated counter. On a network-level failure the
 * view is left untouched and a banner is shown over the last known
 * state.
 */

import { ApiClient, ApiError, UnreachableError } from "./api.js";
import type { Mode } from "./api.js";
import {
  applyCycle,
  applyMemory,
  applyRegisters,
  applySessionInfo,
  applyStep,
  clearSession,
  emptyView,
  windowStart,
  WINDOW_WORDS,
} from "./state.js";
import type { MemoryMode, View } from "./state.js";
import { buildLayout, render } from "./ui.js";
import type { Els } from "./ui.js";

const SAMPLE = `; sum 5..1 into R2, store at total
     lea R4,1[R0]
     lea R1,5[R0]
     lea R2,0[R0]
loop cmpeq R3,R1,R0
     jumpt R3,done[R0]
     add R2,R2,R1
     sub R1,R1,R4
     jump loop[R0]
done store R2,total[R0]
     trap R0,R0,R0
total data 0
`;

export class App {
  readonly view: View = emptyView();
  readonly els: Els;
  private chain: Promise<void> = Promise.resolve();
  private baseline = 0;

  constructor(
    root: HTMLElement,
    readonly api: ApiClient,
    private readonly confirmFn: (msg: string) => boolean = (msg) =>
      root.ownerDocument.defaultView?.confirm(msg) ?? true,
  ) {
    this.els = buildLayout(root);
    this.els.source.value = SAMPLE;
    this.wire();
    render(this.els, this.view);
  }

  /** Resolves once every queued action has finished. */
  idle(): Promise<void> {
    return this.chain;
  }

  private enqueue(action: () => Promise<void>): Promise<void> {
    this.chain = this.chain.then(async () => {
      render(this.els, this.view, true);
      try {
        this.view.error = null;
        await action();
        this.view.unreachable = false;
      } catch (err) {
        if (err instanceof UnreachableError) {
          this.view.unreachable = true;
        } else if (err instanceof ApiError) {
          this.view.error = err.message;
        } else {
          this.view.error = String(err);
        }
      } finally {
        render(this.els, this.view);
      }
    });
    return this.chain;
  }

  private sid(): string {
    if (this.view.sessionId === null) {
      throw new Error("no active session");
    }
    return this.view.sessionId;
  }

  /** Re-reads everything shown: memory window, registers, m1 cycle. */
  private async refresh(): Promise<void> {
    const sid = this.sid();
    applyMemory(
      this.view,
      await this.api.memory(sid, windowStart(this.view), WINDOW_WORDS),
    );
    applyRegisters(this.view, await this.api.registers(sid));
    if (this.view.mode === "m1") {
      applyCycle(this.view, await this.api.cycle(sid));
    }
  }

  private progress(): number {
    return this.view.steps ?? this.view.cycle ?? 0;
  }

  private async doAssemble(): Promise<void> {
    const resp = await this.api.assemble(this.els.source.value);
    this.view.diagnostics = resp.errors;
    if (!resp.ok || resp.object_text === null) {
      return;
    }
    const running =
      this.view.sessionId !== null &&
      !this.view.halted &&
      this.progress() > this.baseline;
    if (running && !this.confirmFn(
      "The current session is still running. Load the new program and reset?",
    )) {
      return;
    }
    if (this.view.sessionId !== null) {
      await this.api.deleteSession(this.view.sessionId);
    }
    const diagnostics = this.view.diagnostics;
    clearSession(this.view);
    this.view.diagnostics = diagnostics;
    this.view.symbols = resp.symbols;
    const mode = this.els.newMode.value as Mode;
    const machine = this.els.newMachine.value as "m1" | "m1x";
    const info = await this.api.createSession(mode, resp.object_text, machine);
    applySessionInfo(this.view, info);
    this.baseline = this.progress();
    await this.refresh();
  }

  private async doStep(): Promise<void> {
    const n = Math.max(1, parseInt(this.els.stepN.value, 10) || 1);
    applyStep(this.view, await this.api.step(this.sid(), n));
    await this.refresh();
  }

  private async doRun(): Promise<void> {
    const budget = Math.max(1, parseInt(this.els.budget.value, 10) || 10_000);
    applyStep(this.view, await this.api.run(this.sid(), budget));
    await this.refresh();
  }

  private async doReset(): Promise<void> {
    applySessionInfo(this.view, await this.api.reset(this.sid()));
    this.view.stopped = null;
    await this.refresh();
  }

  private async doDelete(): Promise<void> {
    await this.api.deleteSession(this.sid());
    clearSession(this.view);
  }

  private async doSetBreakpoint(): Promise<void> {
    const addr = this.parseAddr(this.els.bpAddr.value);
    applySessionInfo(this.view, await this.api.setBreakpoint(this.sid(), addr));
    this.els.bpAddr.value = "";
  }

  private async doClearBreakpoint(addr: number): Promise<void> {
    applySessionInfo(
      this.view,
      await this.api.clearBreakpoint(this.sid(), addr),
    );
  }

  private async doPoke(): Promise<void> {
    const addr = this.parseAddr(this.els.pokeAddr.value);
    const value = this.parseAddr(this.els.pokeValue.value);
    const resp = await this.api.poke(this.sid(), addr, value);
    this.view.counter = Math.max(this.view.counter, resp.counter);
    this.view.lastWrite = resp.addr;
    await this.refresh();
  }

  private async doMemoryView(): Promise<void> {
    this.view.memoryMode = this.els.memMode.value as MemoryMode;
    if (this.view.memoryMode === "manual" && this.els.memAddr.value !== "") {
      this.view.manualAddr = this.parseAddr(this.els.memAddr.value);
    }
    if (this.view.sessionId !== null) {
      applyMemory(
        this.view,
        await this.api.memory(
          this.sid(),
          windowStart(this.view),
          WINDOW_WORDS,
        ),
      );
    }
  }

  /** Accepts a four-digit hex address, 0x/$ prefixes, or a label. */
  private parseAddr(text: string): number {
    const trimmed = text.trim();
    if (trimmed in this.view.symbols) {
      return this.view.symbols[trimmed];
    }
    const hex = trimmed.replace(/^(\$|0x)/i, "");
    const value = /^[0-9a-f]+$/i.test(hex) ? parseInt(hex, 16) : NaN;
    if (!Number.isInteger(value) || value < 0 || value > 0xffff) {
      throw new Error(`not an address or known label: ${text.trim()}`);
    }
    return value;
  }

  private wire(): void {
    this.els.assemble.addEventListener("click", () =>
      this.enqueue(() => this.doAssemble()),
    );
    this.els.step.addEventListener("click", () =>
      this.enqueue(() => this.doStep()),
    );
    this.els.run.addEventListener("click", () =>
      this.enqueue(() => this.doRun()),
    );
    this.els.reset.addEventListener("click", () =>
      this.enqueue(() => this.doReset()),
    );
    this.els.del.addEventListener("click", () =>
      this.enqueue(() => this.doDelete()),
    );
    this.els.bpSet.addEventListener("click", () =>
      this.enqueue(() => this.doSetBreakpoint()),
    );
    this.els.breakpoints.addEventListener("click", (ev) => {
      const target = ev.target as HTMLElement;
      if (target.classList.contains("bp-clear") && target.dataset.addr) {
        const addr = Number(target.dataset.addr);
        void this.enqueue(() => this.doClearBreakpoint(addr));
      }
    });
    this.els.poke.addEventListener("click", () =>
      this.enqueue(() => this.doPoke()),
    );
    this.els.memMode.addEventListener("change", () =>
      this.enqueue(() => this.doMemoryView()),
    );
    this.els.memAddr.addEventListener("change", () =>
      this.enqueue(() => this.doMemoryView()),
    );
  }
}
