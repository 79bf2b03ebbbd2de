import { beforeEach, describe, expect, it } from "vitest";

import type { CycleResponse } from "../src/api.js";
import {
  applyMemory,
  applyRegisters,
  emptyView,
} from "../src/state.js";
import type { View } from "../src/state.js";
import { buildLayout, fmtHex4, render } from "../src/ui.js";
import type { Els } from "../src/ui.js";

let els: Els;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  els = buildLayout(document.getElementById("app") as HTMLElement);
});

function text(id: string): string {
  return document.getElementById(id)?.textContent ?? "";
}

function cls(id: string): DOMTokenList {
  return (document.getElementById(id) as HTMLElement).classList;
}

function sampleCycle(): CycleResponse {
  return {
    counter: 4,
    cycle: 21,
    state: "st_jumpf1",
    signals: { ctl_rf_sd: 1, ctl_y_ad: 1, ctl_pc_ld: 0, ctl_alu_a: 0 },
    words: { ir: 0xf604, pc: 0x0010, ad: 0x0011 },
    cnd: 1,
    m_sto: 0,
    text: "Clock cycle 21\n      st_jumpf1 = 1\n",
  };
}

describe("register pane", () => {
  it("renders every register as the hex image of the raw value", () => {
    const view = emptyView();
    const values = Array.from({ length: 16 }, (_, i) => i * 1000);
    applyRegisters(view, { counter: 1, registers: values, pc: 0x1f,
                           halted: false });
    render(els, view);
    for (let i = 0; i < 16; i++) {
      expect(text(`reg-${i}`)).toBe(fmtHex4(values[i]));
    }
    expect(text("reg-pc")).toBe("001f");
  });

  it("highlights only registers whose value changed", () => {
    const view = emptyView();
    const before = Array(16).fill(7);
    const after = [...before];
    after[2] = 8;
    applyRegisters(view, { counter: 1, registers: before, pc: 0,
                           halted: false });
    applyRegisters(view, { counter: 2, registers: after, pc: 0,
                           halted: false });
    render(els, view);
    expect(cls("reg-2").contains("changed")).toBe(true);
    expect(cls("reg-1").contains("changed")).toBe(false);
    expect(cls("reg-3").contains("changed")).toBe(false);
  });
});

describe("memory pane", () => {
  function viewWithWindow(): View {
    const view = emptyView();
    view.pc = 0x0102;
    view.lastWrite = 0x010f;
    view.breakpoints = [0x0105];
    applyMemory(view, {
      counter: 1,
      start: 0x0100,
      words: Array.from({ length: 16 }, (_, i) => 0xa000 + i),
    });
    return view;
  }

  it("renders addresses and raw words in hex", () => {
    const view = viewWithWindow();
    render(els, view);
    expect(text("mem-addr-0")).toBe("0100");
    expect(text("mem-0")).toBe("a000");
    expect(text("mem-addr-15")).toBe("010f");
    expect(text("mem-15")).toBe("a00f");
  });

  it("marks pc, breakpoint, and last-write rows", () => {
    const view = viewWithWindow();
    render(els, view);
    expect(cls("mem-row-2").contains("pc-row")).toBe(true);
    expect(cls("mem-row-5").contains("bp-row")).toBe(true);
    expect(cls("mem-row-15").contains("write-row")).toBe(true);
    expect(cls("mem-row-3").contains("pc-row")).toBe(false);
  });

  it("highlights value cells that changed between responses", () => {
    const view = viewWithWindow();
    const words = [...view.memory!.words];
    words[4] = 0xbeef;
    applyMemory(view, { counter: 2, start: 0x0100, words });
    render(els, view);
    expect(cls("mem-4").contains("changed")).toBe(true);
    expect(cls("mem-3").contains("changed")).toBe(false);
    expect(text("mem-4")).toBe("beef");
  });
});

describe("control pane", () => {
  it("stays hidden for emulator sessions", () => {
    const view = emptyView();
    view.mode = "emulator";
    render(els, view);
    expect((document.getElementById("control-pane") as HTMLElement).hidden)
      .toBe(true);
  });

  it("shows the state name, signal bits, and datapath words for m1", () => {
    const view = emptyView();
    view.mode = "m1";
    view.cycleRecord = sampleCycle();
    view.counter = 4;
    render(els, view);
    expect((document.getElementById("control-pane") as HTMLElement).hidden)
      .toBe(false);
    expect(text("ctl-state")).toBe("st_jumpf1");
    expect(text("ctl-cycle")).toBe("21");
    expect(text("sig-ctl_rf_sd")).toBe("1");
    expect(text("sig-ctl_pc_ld")).toBe("0");
    expect(text("word-ir")).toBe("f604");
    expect(text("word-pc")).toBe("0010");
    expect(text("cycle-text")).toContain("st_jumpf1 = 1");
  });
});

describe("status and logs", () => {
  it("shows the unreachable banner without touching rendered values", () => {
    const view = emptyView();
    applyRegisters(view, { counter: 1, registers: Array(16).fill(0x1234),
                           pc: 0, halted: false });
    render(els, view);
    expect((document.getElementById("banner") as HTMLElement).hidden)
      .toBe(true);
    view.unreachable = true;
    render(els, view);
    expect((document.getElementById("banner") as HTMLElement).hidden)
      .toBe(false);
    expect(text("reg-7")).toBe("1234");
  });

  it("lists diagnostics with line numbers", () => {
    const view = emptyView();
    view.diagnostics = [{ line: 3, message: "undefined label 'loop'" }];
    render(els, view);
    const items = document.querySelectorAll("#diagnostics li");
    expect(items).toHaveLength(1);
    expect(items[0].textContent).toBe("line 3: undefined label 'loop'");
  });

  it("renders event texts verbatim with their addresses", () => {
    const view = emptyView();
    view.events = [
      { kind: "exec", addr: 0x10, text: "jumpf R6,0011[R0]  ea=0011  taken" },
      { kind: "halt", addr: 0x12, text: "HALT\t0012" },
    ];
    render(els, view);
    const items = document.querySelectorAll("#events li");
    expect(items).toHaveLength(2);
    expect(items[0].textContent)
      .toBe("0010  jumpf R6,0011[R0]  ea=0011  taken");
    expect(items[1].classList.contains("ev-halt")).toBe(true);
  });

  it("shows halted state and stop reason badges", () => {
    const view = emptyView();
    view.halted = true;
    view.stopped = "breakpoint";
    render(els, view);
    expect((document.getElementById("halted-badge") as HTMLElement).hidden)
      .toBe(false);
    expect(text("stopped")).toBe("breakpoint");
  });
});
