/** View model for one debugging session.
 *
 * The view stores service values untouched: registers, memory words,
 * the control-state record, and event texts all come verbatim from API
 * responses. The only view-side computations are the staleness gate
 * (responses with a counter below the newest seen are dropped), value
 * diffs between consecutive responses, and the choice of which 16-word
 * memory window to fetch.
 */

import type {
  CycleResponse,
  Diagnostic,
  EventView,
  MemoryResponse,
  Mode,
  RegistersResponse,
  SessionInfo,
  StepResponse,
} from "./api.js";

export const WINDOW_WORDS = 16;
export const MEMORY_WORDS = 65536;

export type MemoryMode = "pc" | "write" | "manual";

export interface MemoryWindow {
  start: number;
  words: number[];
}

export interface View {
  sessionId: string | null;
  mode: Mode | null;
  machine: string | null;
  program: string | null;
  counter: number;
  steps: number | null;
  cycle: number | null;
  pc: number;
  halted: boolean;
  stopped: string | null;
  lastWrite: number | null;
  breakpoints: number[];
  registers: number[] | null;
  prevRegisters: number[] | null;
  memory: MemoryWindow | null;
  prevMemory: MemoryWindow | null;
  memoryMode: MemoryMode;
  manualAddr: number;
  cycleRecord: CycleResponse | null;
  events: EventView[];
  diagnostics: Diagnostic[];
  symbols: Record<string, number>;
  unreachable: boolean;
  error: string | null;
}

export function emptyView(): View {
  return {
    sessionId: null,
    mode: null,
    machine: null,
    program: null,
    counter: -1,
    steps: null,
    cycle: null,
    pc: 0,
    halted: false,
    stopped: null,
    lastWrite: null,
    breakpoints: [],
    registers: null,
    prevRegisters: null,
    memory: null,
    prevMemory: null,
    memoryMode: "pc",
    manualAddr: 0,
    cycleRecord: null,
    events: [],
    diagnostics: [],
    symbols: {},
    unreachable: false,
    error: null,
  };
}

/** Applies a response only if it is at least as new as everything seen. */
function fresh(view: View, counter: number): boolean {
  if (counter < view.counter) {
    return false;
  }
  view.counter = counter;
  return true;
}

export function applySessionInfo(view: View, info: SessionInfo): boolean {
  if (!fresh(view, info.counter)) {
    return false;
  }
  view.sessionId = info.id;
  view.mode = info.mode;
  view.machine = info.machine;
  view.program = info.program;
  view.steps = info.steps;
  view.cycle = info.cycle;
  view.pc = info.pc;
  view.halted = info.halted;
  view.lastWrite = info.last_write;
  view.breakpoints = [...info.breakpoints];
  return true;
}

export function applyStep(view: View, resp: StepResponse): boolean {
  if (!fresh(view, resp.counter)) {
    return false;
  }
  view.steps = resp.steps;
  view.cycle = resp.cycle;
  view.pc = resp.pc;
  view.halted = resp.halted;
  view.stopped = resp.stopped;
  view.lastWrite = resp.last_write;
  view.events.push(...resp.events);
  return true;
}

export function applyRegisters(view: View, resp: RegistersResponse): boolean {
  if (!fresh(view, resp.counter)) {
    return false;
  }
  view.prevRegisters = view.registers;
  view.registers = [...resp.registers];
  view.pc = resp.pc;
  view.halted = resp.halted;
  return true;
}

export function applyMemory(view: View, resp: MemoryResponse): boolean {
  if (!fresh(view, resp.counter)) {
    return false;
  }
  view.prevMemory = view.memory;
  view.memory = { start: resp.start, words: [...resp.words] };
  return true;
}

export function applyCycle(view: View, resp: CycleResponse): boolean {
  if (!fresh(view, resp.counter)) {
    return false;
  }
  view.cycleRecord = resp;
  return true;
}

export function clearSession(view: View): void {
  const kept = {
    memoryMode: view.memoryMode,
    manualAddr: view.manualAddr,
    diagnostics: view.diagnostics,
    symbols: view.symbols,
  };
  Object.assign(view, emptyView(), kept);
}

/** Register indices whose value differs from the previous response. */
export function changedRegisters(view: View): Set<number> {
  const changed = new Set<number>();
  if (view.registers && view.prevRegisters) {
    for (let i = 0; i < view.registers.length; i++) {
      if (view.registers[i] !== view.prevRegisters[i]) {
        changed.add(i);
      }
    }
  }
  return changed;
}

/** Addresses shown now whose value differs from the previous window. */
export function changedMemory(view: View): Set<number> {
  const changed = new Set<number>();
  const mem = view.memory;
  const prev = view.prevMemory;
  if (!mem || !prev) {
    return changed;
  }
  for (let i = 0; i < mem.words.length; i++) {
    const addr = mem.start + i;
    const j = addr - prev.start;
    if (j >= 0 && j < prev.words.length && prev.words[j] !== mem.words[i]) {
      changed.add(addr);
    }
  }
  return changed;
}

/** Start of the 16-word window to display, aligned to a window multiple.
 *
 * follow-pc anchors at the program counter; follow-last-write anchors
 * at the most recently written address (falling back to the pc before
 * the first write); manual anchors at the user-entered address.
 */
export function windowStart(view: View): number {
  let anchor: number;
  switch (view.memoryMode) {
    case "pc":
      anchor = view.pc;
      break;
    case "write":
      anchor = view.lastWrite ?? view.pc;
      break;
    case "manual":
      anchor = view.manualAddr;
      break;
  }
  const aligned = anchor - (anchor % WINDOW_WORDS);
  return Math.min(Math.max(aligned, 0), MEMORY_WORDS - WINDOW_WORDS);
}
