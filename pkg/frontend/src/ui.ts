/** DOM construction and rendering.
 *
 * The skeleton is static markup; every dynamic value is written with
 * textContent and comes straight from the view model, which holds raw
 * service values. fmtHex4 is the single value formatter, so a rendered
 * cell is always the four-digit hex image of one service number.
 */

import type { View } from "./state.js";
import {
  changedMemory,
  changedRegisters,
  WINDOW_WORDS,
} from "./state.js";

export function fmtHex4(value: number): string {
  return value.toString(16).padStart(4, "0");
}

const SKELETON = `
  <header class="toolbar">
    <strong>sigma16forge</strong>
    <span id="program" class="badge"></span>
    <span id="mode-badge" class="badge"></span>
    <span id="progress" class="badge"></span>
    <span id="stopped" class="badge"></span>
    <span id="halted-badge" class="badge alert" hidden>HALTED</span>
  </header>
  <div id="banner" class="banner" hidden>
    Service unreachable; showing the last known state.
  </div>
  <div id="error" class="banner error" hidden></div>
  <main class="columns">
    <section class="pane editor-pane">
      <h2>Editor</h2>
      <textarea id="source" spellcheck="false" rows="18"></textarea>
      <div class="row">
        <label>mode
          <select id="new-mode">
            <option value="emulator">emulator</option>
            <option value="m1">m1</option>
          </select>
        </label>
        <label>machine
          <select id="new-machine">
            <option value="m1">m1</option>
            <option value="m1x">m1x</option>
          </select>
        </label>
        <button id="assemble">Assemble &amp; load</button>
      </div>
      <h3>Diagnostics</h3>
      <ul id="diagnostics" class="diagnostics"></ul>
    </section>
    <section class="pane machine-pane">
      <div class="row controls">
        <button id="step" disabled>Step</button>
        <input id="step-n" type="number" value="1" min="1" size="5">
        <button id="run" disabled>Run</button>
        <input id="budget" type="number" value="10000" min="1" size="8">
        <button id="reset" disabled>Reset</button>
        <button id="delete" disabled>Delete</button>
      </div>
      <div class="row">
        <label>breakpoint <input id="bp-addr" size="8" placeholder="hex or label"></label>
        <button id="bp-set" disabled>Set</button>
        <ul id="breakpoints" class="chips"></ul>
      </div>
      <div class="row">
        <label>poke <input id="poke-addr" size="8" placeholder="addr"></label>
        <input id="poke-value" size="8" placeholder="value">
        <button id="poke" disabled>Poke</button>
      </div>
      <div class="grid">
        <div>
          <h2>Registers</h2>
          <table id="registers" class="cells"></table>
        </div>
        <div>
          <h2>Memory</h2>
          <div class="row">
            <select id="mem-mode">
              <option value="pc">follow pc</option>
              <option value="write">follow last write</option>
              <option value="manual">manual</option>
            </select>
            <input id="mem-addr" size="8" placeholder="hex or label" disabled>
          </div>
          <table id="memory" class="cells"></table>
        </div>
        <div id="control-pane" hidden>
          <h2>Control</h2>
          <div class="row">state <strong id="ctl-state"></strong>
            <span>cycle <span id="ctl-cycle"></span></span>
            <span>cnd <span id="ctl-cnd"></span></span>
            <span>m_sto <span id="ctl-msto"></span></span>
          </div>
          <table id="signals" class="cells signals"></table>
          <table id="ctl-words" class="cells"></table>
          <details>
            <summary>cycle text</summary>
            <pre id="cycle-text"></pre>
          </details>
        </div>
      </div>
      <h2>Events</h2>
      <ul id="events" class="events"></ul>
    </section>
  </main>
`;

export interface Els {
  root: HTMLElement;
  program: HTMLElement;
  modeBadge: HTMLElement;
  progress: HTMLElement;
  stopped: HTMLElement;
  haltedBadge: HTMLElement;
  banner: HTMLElement;
  error: HTMLElement;
  source: HTMLTextAreaElement;
  newMode: HTMLSelectElement;
  newMachine: HTMLSelectElement;
  assemble: HTMLButtonElement;
  diagnostics: HTMLElement;
  step: HTMLButtonElement;
  stepN: HTMLInputElement;
  run: HTMLButtonElement;
  budget: HTMLInputElement;
  reset: HTMLButtonElement;
  del: HTMLButtonElement;
  bpAddr: HTMLInputElement;
  bpSet: HTMLButtonElement;
  breakpoints: HTMLElement;
  pokeAddr: HTMLInputElement;
  pokeValue: HTMLInputElement;
  poke: HTMLButtonElement;
  registers: HTMLTableElement;
  memMode: HTMLSelectElement;
  memAddr: HTMLInputElement;
  memory: HTMLTableElement;
  controlPane: HTMLElement;
  ctlState: HTMLElement;
  ctlCycle: HTMLElement;
  ctlCnd: HTMLElement;
  ctlMsto: HTMLElement;
  signals: HTMLTableElement;
  ctlWords: HTMLTableElement;
  cycleText: HTMLElement;
  events: HTMLElement;
}

function grab<T extends HTMLElement>(root: HTMLElement, id: string): T {
  const el = root.querySelector<T>(`#${id}`);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el;
}

export function buildLayout(root: HTMLElement): Els {
  root.innerHTML = SKELETON;
  const els: Els = {
    root,
    program: grab(root, "program"),
    modeBadge: grab(root, "mode-badge"),
    progress: grab(root, "progress"),
    stopped: grab(root, "stopped"),
    haltedBadge: grab(root, "halted-badge"),
    banner: grab(root, "banner"),
    error: grab(root, "error"),
    source: grab(root, "source"),
    newMode: grab(root, "new-mode"),
    newMachine: grab(root, "new-machine"),
    assemble: grab(root, "assemble"),
    diagnostics: grab(root, "diagnostics"),
    step: grab(root, "step"),
    stepN: grab(root, "step-n"),
    run: grab(root, "run"),
    budget: grab(root, "budget"),
    reset: grab(root, "reset"),
    del: grab(root, "delete"),
    bpAddr: grab(root, "bp-addr"),
    bpSet: grab(root, "bp-set"),
    breakpoints: grab(root, "breakpoints"),
    pokeAddr: grab(root, "poke-addr"),
    pokeValue: grab(root, "poke-value"),
    poke: grab(root, "poke"),
    registers: grab(root, "registers"),
    memMode: grab(root, "mem-mode"),
    memAddr: grab(root, "mem-addr"),
    memory: grab(root, "memory"),
    controlPane: grab(root, "control-pane"),
    ctlState: grab(root, "ctl-state"),
    ctlCycle: grab(root, "ctl-cycle"),
    ctlCnd: grab(root, "ctl-cnd"),
    ctlMsto: grab(root, "ctl-msto"),
    signals: grab(root, "signals"),
    ctlWords: grab(root, "ctl-words"),
    cycleText: grab(root, "cycle-text"),
    events: grab(root, "events"),
  };
  buildRegisterRows(els.registers, root.ownerDocument);
  buildMemoryRows(els.memory, root.ownerDocument);
  return els;
}

function buildRegisterRows(table: HTMLTableElement, doc: Document): void {
  for (let i = 0; i <= 16; i++) {
    const row = doc.createElement("tr");
    const name = doc.createElement("td");
    name.className = "name";
    name.textContent = i < 16 ? `R${i}` : "pc";
    const value = doc.createElement("td");
    value.className = "value";
    value.id = i < 16 ? `reg-${i}` : "reg-pc";
    row.append(name, value);
    table.append(row);
  }
}

function buildMemoryRows(table: HTMLTableElement, doc: Document): void {
  for (let i = 0; i < WINDOW_WORDS; i++) {
    const row = doc.createElement("tr");
    row.id = `mem-row-${i}`;
    const addr = doc.createElement("td");
    addr.className = "name";
    addr.id = `mem-addr-${i}`;
    const value = doc.createElement("td");
    value.className = "value";
    value.id = `mem-${i}`;
    row.append(addr, value);
    table.append(row);
  }
}

function renderStatus(els: Els, view: View): void {
  els.program.textContent = view.program ?? "no program";
  els.modeBadge.textContent = view.mode
    ? view.mode + (view.machine ? ` (${view.machine})` : "")
    : "no session";
  if (view.steps !== null) {
    els.progress.textContent = `steps ${view.steps}`;
  } else if (view.cycle !== null) {
    els.progress.textContent = `cycle ${view.cycle}`;
  } else {
    els.progress.textContent = "";
  }
  els.stopped.textContent = view.stopped ?? "";
  els.haltedBadge.hidden = !view.halted;
  els.banner.hidden = !view.unreachable;
  els.error.hidden = view.error === null;
  els.error.textContent = view.error ?? "";
}

function renderRegisters(els: Els, view: View): void {
  const changed = changedRegisters(view);
  for (let i = 0; i < 16; i++) {
    const cell = grab<HTMLElement>(els.root, `reg-${i}`);
    cell.textContent = view.registers ? fmtHex4(view.registers[i]) : "";
    cell.classList.toggle("changed", changed.has(i));
  }
  const pcCell = grab<HTMLElement>(els.root, "reg-pc");
  pcCell.textContent = view.registers ? fmtHex4(view.pc) : "";
  pcCell.classList.remove("changed");
}

function renderMemory(els: Els, view: View): void {
  const changed = changedMemory(view);
  const bps = new Set(view.breakpoints);
  for (let i = 0; i < WINDOW_WORDS; i++) {
    const row = grab<HTMLElement>(els.root, `mem-row-${i}`);
    const addrCell = grab<HTMLElement>(els.root, `mem-addr-${i}`);
    const valueCell = grab<HTMLElement>(els.root, `mem-${i}`);
    if (!view.memory || i >= view.memory.words.length) {
      addrCell.textContent = "";
      valueCell.textContent = "";
      row.className = "";
      valueCell.classList.remove("changed");
      continue;
    }
    const addr = view.memory.start + i;
    addrCell.textContent = fmtHex4(addr);
    valueCell.textContent = fmtHex4(view.memory.words[i]);
    valueCell.classList.toggle("changed", changed.has(addr));
    row.classList.toggle("pc-row", addr === view.pc);
    row.classList.toggle("bp-row", bps.has(addr));
    row.classList.toggle("write-row", addr === view.lastWrite);
  }
  els.memAddr.disabled = view.memoryMode !== "manual";
}

function renderControl(els: Els, view: View): void {
  const rec = view.cycleRecord;
  els.controlPane.hidden = view.mode !== "m1" || rec === null;
  if (els.controlPane.hidden || rec === null) {
    return;
  }
  const doc = els.root.ownerDocument;
  els.ctlState.textContent = rec.state;
  els.ctlCycle.textContent = String(rec.cycle);
  els.ctlCnd.textContent = String(rec.cnd);
  els.ctlMsto.textContent = String(rec.m_sto);
  els.signals.textContent = "";
  for (const [name, bit] of Object.entries(rec.signals)) {
    const row = doc.createElement("tr");
    row.className = bit ? "on" : "";
    const nameCell = doc.createElement("td");
    nameCell.className = "name";
    nameCell.textContent = name;
    const bitCell = doc.createElement("td");
    bitCell.className = "value";
    bitCell.id = `sig-${name}`;
    bitCell.textContent = String(bit);
    row.append(nameCell, bitCell);
    els.signals.append(row);
  }
  els.ctlWords.textContent = "";
  for (const [name, word] of Object.entries(rec.words)) {
    const row = doc.createElement("tr");
    const nameCell = doc.createElement("td");
    nameCell.className = "name";
    nameCell.textContent = name;
    const wordCell = doc.createElement("td");
    wordCell.className = "value";
    wordCell.id = `word-${name}`;
    wordCell.textContent = fmtHex4(word);
    row.append(nameCell, wordCell);
    els.ctlWords.append(row);
  }
  els.cycleText.textContent = rec.text;
}

function renderLists(els: Els, view: View): void {
  const doc = els.root.ownerDocument;
  els.diagnostics.textContent = "";
  for (const d of view.diagnostics) {
    const item = doc.createElement("li");
    item.textContent = `line ${d.line}: ${d.message}`;
    els.diagnostics.append(item);
  }
  els.breakpoints.textContent = "";
  for (const addr of view.breakpoints) {
    const item = doc.createElement("li");
    const label = doc.createElement("span");
    label.textContent = fmtHex4(addr);
    const clear = doc.createElement("button");
    clear.textContent = "×";
    clear.className = "bp-clear";
    clear.dataset.addr = String(addr);
    item.append(label, clear);
    els.breakpoints.append(item);
  }
  els.events.textContent = "";
  const recent = view.events.slice(-300);
  for (const ev of recent) {
    const item = doc.createElement("li");
    item.className = `ev-${ev.kind}`;
    item.textContent = `${fmtHex4(ev.addr)}  ${ev.text}`;
    els.events.append(item);
  }
  if (els.events.lastElementChild) {
    els.events.lastElementChild.scrollIntoView?.({ block: "nearest" });
  }
}

function renderButtons(els: Els, view: View, busy: boolean): void {
  const noSession = view.sessionId === null;
  els.assemble.disabled = busy;
  for (const b of [els.step, els.run, els.reset, els.del, els.bpSet,
                   els.poke]) {
    b.disabled = busy || noSession;
  }
  for (const b of els.breakpoints.querySelectorAll("button")) {
    b.disabled = busy;
  }
}

export function render(els: Els, view: View, busy = false): void {
  renderStatus(els, view);
  renderRegisters(els, view);
  renderMemory(els, view);
  renderControl(els, view);
  renderLists(els, view);
  renderButtons(els, view, busy);
}
