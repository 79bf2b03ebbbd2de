"""Interactive debugging service over the emulator and the processor.

A session owns one running machine: either the instruction-level
emulator or the gate-level processor. Clients create a session from an
object module, advance it (`step` by n instructions or clock cycles,
`run` until halt, breakpoint, or budget), inspect registers and memory,
poke memory, manage breakpoints, reset, and delete.

Every response carries `counter`, a session version that increases on
every state-mutating call and never rewinds (reset included); clients
compare counters to discard stale responses. Machine progress is
reported separately (`steps` for the emulator, `cycle` for the
processor) and does rewind on reset.

Breakpoints use one rule in both modes: execution pauses when the
machine is about to execute the instruction at a breakpoint address
(emulator: pc equals the address; processor: the fetch state is entered
with pc at the address).

`last_write` reports the most recent memory address written by a store
instruction or a poke (None before the first write, cleared on reset)
so clients can track the active data region without decoding events.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import emulator
from .asm import MEMORY_WORDS, ObjectFormatError, ObjectModule, assemble
from .m1 import M1, TERMINAL_STATES, build_m1, m1_inputs
from .testbench import (
    DriverScript,
    Watcher,
    driver_operands,
    format_cycle,
    record_from_outputs,
)

WORD_LIMIT = MEMORY_WORDS - 1


# -- request / response bodies -----------------------------------------


class AssembleRequest(BaseModel):
    source: str
    name: str = "main"


class DiagnosticView(BaseModel):
    line: int
    message: str


class AssembleResponse(BaseModel):
    ok: bool
    errors: list[DiagnosticView]
    object_text: Optional[str] = None
    listing: Optional[str] = None
    symbols: dict[str, int] = {}


class CreateSessionRequest(BaseModel):
    mode: Literal["emulator", "m1"]
    object_text: str
    machine: Literal["m1", "m1x"] = "m1"


class SessionInfo(BaseModel):
    id: str
    mode: str
    machine: Optional[str] = None
    program: str
    counter: int
    steps: Optional[int] = None
    cycle: Optional[int] = None
    pc: int
    halted: bool
    breakpoints: list[int]
    last_write: Optional[int] = None


class StepRequest(BaseModel):
    n: int = Field(default=1, ge=1, le=100_000)


class RunRequest(BaseModel):
    budget: int = Field(default=10_000, ge=1, le=1_000_000)


class EventView(BaseModel):
    kind: str
    addr: int
    text: str


class StepResponse(BaseModel):
    counter: int
    steps: Optional[int] = None
    cycle: Optional[int] = None
    pc: int
    halted: bool
    stopped: Literal["halted", "breakpoint", "budget", "stepped"]
    events: list[EventView]
    last_write: Optional[int] = None


class RegistersResponse(BaseModel):
    counter: int
    registers: list[int]
    pc: int
    halted: bool


class MemoryResponse(BaseModel):
    counter: int
    start: int
    words: list[int]


class CycleResponse(BaseModel):
    counter: int
    cycle: int
    state: str
    signals: dict[str, int]
    words: dict[str, int]
    cnd: int
    m_sto: int
    text: str


class PokeRequest(BaseModel):
    addr: int = Field(ge=0, le=WORD_LIMIT)
    value: int = Field(ge=0, le=0xFFFF)


class PokeResponse(BaseModel):
    counter: int
    addr: int
    value: int


# -- sessions ----------------------------------------------------------


_PROCESSORS: dict[str, M1] = {}
_PROC_LOCK = threading.Lock()


def _processor(machine: str) -> M1:
    with _PROC_LOCK:
        if machine not in _PROCESSORS:
            _PROCESSORS[machine] = build_m1(loadxi=machine == "m1x")
        return _PROCESSORS[machine]


class EmulatorSession:
    mode = "emulator"
    machine_name = None

    def __init__(self, obj: ObjectModule):
        self.obj = obj
        self.breakpoints: set[int] = set()
        self.counter = 0
        self._reset()

    def _reset(self):
        self.machine, _ = emulator.boot(self.obj)
        self.steps = 0
        self.last_write: Optional[int] = None

    def reset(self):
        self._reset()

    @property
    def pc(self) -> int:
        return self.machine.pc

    @property
    def halted(self) -> bool:
        return self.machine.halted

    def progress(self) -> dict:
        return {"steps": self.steps}

    def _advance(self) -> list[EventView]:
        events = emulator.step(self.machine)
        self.steps += 1
        for e in events:
            if e.kind == "exec" and any(loc.startswith("mem[")
                                        for loc, _ in e.writes):
                self.last_write = e.ea
        return [EventView(kind=e.kind, addr=e.addr,
                          text=emulator.trace_line(e))
                for e in events]

    def step(self, n: int):
        views: list[EventView] = []
        for _ in range(n):
            if self.machine.halted:
                return "halted", views
            views.extend(self._advance())
        return ("halted" if self.machine.halted else "stepped"), views

    def run(self, budget: int):
        views: list[EventView] = []
        for _ in range(budget):
            if self.machine.halted:
                return "halted", views
            views.extend(self._advance())
            if self.machine.halted:
                return "halted", views
            if self.machine.pc in self.breakpoints:
                return "breakpoint", views
        return "budget", views

    def registers(self) -> list[int]:
        return [self.machine.reg(n) for n in range(16)]

    def read_memory(self, start: int, count: int) -> list[int]:
        return self.machine.mem[start:start + count]

    def poke(self, addr: int, value: int):
        self.machine.mem[addr] = value
        self.last_write = addr


class M1Session:
    mode = "m1"

    def __init__(self, obj: ObjectModule, machine: str):
        self.obj = obj
        self.machine_name = machine
        self.proc = _processor(machine)
        self.script = DriverScript.for_processor(self.proc)
        self.breakpoints: set[int] = set()
        self.counter = 0
        self._reset()

    def _reset(self):
        self.sim = self.proc.simulator()
        self.watcher = Watcher(self.proc.state_names)
        self.cycle = 0
        self.last_record = None
        self.last_write: Optional[int] = None
        self._drive(reset=1, start=0)
        for addr, word in enumerate(self.obj.dense_words()):
            self._drive(start=0, dma=1, dma_store=1, dma_a=addr,
                        dma_d=word)
        self._loaded_at = self.cycle

    def reset(self):
        self._reset()

    def _drive(self, **kw):
        outs = self.sim.step(m1_inputs(**kw))
        self.last_record = record_from_outputs(self.proc, outs,
                                               self.cycle, **kw)
        self.cycle += 1

    @property
    def pc(self) -> int:
        return self.proc.read_pc(self.sim)

    @property
    def halted(self) -> bool:
        return self.watcher.halted

    def progress(self) -> dict:
        return {"cycle": self.cycle}

    def _advance(self) -> tuple[str, list[EventView]]:
        self._drive()
        before = len(self.watcher.events)
        self.watcher.observe(self.last_record)
        views = []
        for ev in self.watcher.events[before:]:
            if ev.mnemonic == "store":
                self.last_write = ev.ea
            operands = driver_operands(ev.mnemonic, ev.d, ev.sa, ev.sb,
                                       ev.disp)
            text = f"{ev.mnemonic} {operands}"
            if ev.ea is not None:
                text += f"  ea={ev.ea:04x}"
            if ev.taken is not None:
                text += "  taken" if ev.taken else "  not taken"
            views.append(EventView(kind="exec", addr=ev.addr, text=text))
        return self.watcher.hot_state(self.last_record), views

    def step(self, n: int):
        views: list[EventView] = []
        for _ in range(n):
            if self.watcher.halted:
                return "halted", views
            _, new = self._advance()
            views.extend(new)
        return ("halted" if self.watcher.halted else "stepped"), views

    def run(self, budget: int):
        # After a terminal-state cycle the pc flip flops hold the next
        # fetch address, so pausing there mirrors the emulator rule:
        # stopped with pc at the breakpoint, instruction not executed.
        views: list[EventView] = []
        for _ in range(budget):
            if self.watcher.halted:
                return "halted", views
            state, new = self._advance()
            views.extend(new)
            if self.watcher.halted:
                return "halted", views
            if state in TERMINAL_STATES and self.pc in self.breakpoints:
                return "breakpoint", views
        return "budget", views

    def registers(self) -> list[int]:
        return [self.proc.read_register(self.sim, n) for n in range(16)]

    def read_memory(self, start: int, count: int) -> list[int]:
        return self.sim.memory[start:start + count]

    def poke(self, addr: int, value: int):
        self.sim.memory[addr] = value
        self.last_write = addr

    def cycle_record(self) -> CycleResponse:
        rec = self.last_record
        words = {name: rec.values[name]
                 for name in ("ir", "pc", "ad", "a", "b", "r",
                              "x", "y", "p", "ma", "md")}
        return CycleResponse(
            counter=self.counter,
            cycle=rec.cycle,
            state=self.watcher.hot_state(rec) if self.cycle > 1
            else self.proc.state_names[0],
            signals={n: rec.values[n] for n in self.script.signal_names},
            words=words,
            cnd=rec.values["cnd"],
            m_sto=rec.values["m_sto"],
            text=format_cycle(rec, self.script),
        )


Session = EmulatorSession | M1Session


class SessionStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._next = 0

    def create(self, session: Session) -> str:
        with self._lock:
            self._next += 1
            sid = f"s{self._next}"
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
            return sid

    def get(self, sid: str) -> tuple[Session, threading.Lock]:
        with self._lock:
            if sid not in self._sessions:
                raise HTTPException(404, f"no session {sid!r}")
            return self._sessions[sid], self._locks[sid]

    def delete(self, sid: str):
        with self._lock:
            if sid not in self._sessions:
                raise HTTPException(404, f"no session {sid!r}")
            del self._sessions[sid]
            del self._locks[sid]

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions, key=lambda s: int(s[1:]))


# -- application -------------------------------------------------------


def create_app(static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="sigma16forge", version="0.1.0")
    store = SessionStore()
    app.state.sessions = store

    def info(sid: str, session: Session) -> SessionInfo:
        return SessionInfo(
            id=sid, mode=session.mode, machine=session.machine_name,
            program=session.obj.name, counter=session.counter,
            pc=session.pc, halted=session.halted,
            breakpoints=sorted(session.breakpoints),
            last_write=session.last_write,
            **session.progress())

    @app.post("/api/assemble", response_model=AssembleResponse)
    def do_assemble(req: AssembleRequest):
        result = assemble(req.source, name=req.name)
        errors = [DiagnosticView(line=d.line, message=d.message)
                  for d in result.errors]
        if not result.ok:
            return AssembleResponse(ok=False, errors=errors)
        return AssembleResponse(
            ok=True, errors=[], object_text=result.object.to_text(),
            listing=result.listing, symbols=result.symbols)

    @app.post("/api/sessions", response_model=SessionInfo, status_code=201)
    def create_session(req: CreateSessionRequest):
        try:
            obj = ObjectModule.from_text(req.object_text)
        except ObjectFormatError as exc:
            raise HTTPException(422, f"bad object module: {exc}")
        if req.mode == "emulator":
            session: Session = EmulatorSession(obj)
        else:
            session = M1Session(obj, req.machine)
        sid = store.create(session)
        return info(sid, session)

    @app.get("/api/sessions", response_model=list[SessionInfo])
    def list_sessions():
        out = []
        for sid in store.ids():
            session, lock = store.get(sid)
            with lock:
                out.append(info(sid, session))
        return out

    @app.get("/api/sessions/{sid}", response_model=SessionInfo)
    def get_session(sid: str):
        session, lock = store.get(sid)
        with lock:
            return info(sid, session)

    def _advance_response(session: Session, stopped, events) -> StepResponse:
        session.counter += 1
        return StepResponse(
            counter=session.counter, pc=session.pc,
            halted=session.halted, stopped=stopped, events=events,
            last_write=session.last_write, **session.progress())

    @app.post("/api/sessions/{sid}/step", response_model=StepResponse)
    def step_session(sid: str, req: StepRequest):
        session, lock = store.get(sid)
        with lock:
            stopped, events = session.step(req.n)
            return _advance_response(session, stopped, events)

    @app.post("/api/sessions/{sid}/run", response_model=StepResponse)
    def run_session(sid: str, req: RunRequest):
        session, lock = store.get(sid)
        with lock:
            stopped, events = session.run(req.budget)
            return _advance_response(session, stopped, events)

    @app.put("/api/sessions/{sid}/breakpoints/{addr}",
             response_model=SessionInfo)
    def set_breakpoint(sid: str, addr: int):
        if not 0 <= addr <= WORD_LIMIT:
            raise HTTPException(422, "address out of range")
        session, lock = store.get(sid)
        with lock:
            session.breakpoints.add(addr)
            session.counter += 1
            return info(sid, session)

    @app.delete("/api/sessions/{sid}/breakpoints/{addr}",
                response_model=SessionInfo)
    def clear_breakpoint(sid: str, addr: int):
        session, lock = store.get(sid)
        with lock:
            session.breakpoints.discard(addr)
            session.counter += 1
            return info(sid, session)

    @app.get("/api/sessions/{sid}/registers",
             response_model=RegistersResponse)
    def read_registers(sid: str):
        session, lock = store.get(sid)
        with lock:
            return RegistersResponse(
                counter=session.counter, registers=session.registers(),
                pc=session.pc, halted=session.halted)

    @app.get("/api/sessions/{sid}/memory", response_model=MemoryResponse)
    def read_memory(sid: str, start: int = 0, count: int = 16):
        if not (0 <= start <= WORD_LIMIT and 1 <= count <= MEMORY_WORDS
                and start + count <= MEMORY_WORDS):
            raise HTTPException(422, "memory range out of bounds")
        session, lock = store.get(sid)
        with lock:
            return MemoryResponse(counter=session.counter, start=start,
                                  words=session.read_memory(start, count))

    @app.get("/api/sessions/{sid}/cycle", response_model=CycleResponse)
    def read_cycle(sid: str):
        session, lock = store.get(sid)
        with lock:
            if session.mode != "m1":
                raise HTTPException(
                    409, "cycle records exist only for m1 sessions")
            return session.cycle_record()

    @app.post("/api/sessions/{sid}/poke", response_model=PokeResponse)
    def poke_memory(sid: str, req: PokeRequest):
        session, lock = store.get(sid)
        with lock:
            session.poke(req.addr, req.value)
            session.counter += 1
            return PokeResponse(counter=session.counter, addr=req.addr,
                                value=req.value)

    @app.post("/api/sessions/{sid}/reset", response_model=SessionInfo)
    def reset_session(sid: str):
        session, lock = store.get(sid)
        with lock:
            session.reset()
            session.counter += 1
            return info(sid, session)

    @app.delete("/api/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        store.delete(sid)

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app


def default_static_dir() -> Path | None:
    for base in (Path.cwd(), Path(__file__).resolve().parents[2]):
        candidate = base / "frontend" / "dist"
        if candidate.is_dir():
            return candidate
    return None


def serve(host: str = "127.0.0.1", port: int = 8000,
          static_dir: str | None = None):
    import uvicorn

    static = Path(static_dir) if static_dir else default_static_dir()
    uvicorn.run(create_app(static), host=host, port=port)
