"""Solver process management: SMT-LIB v2 over stdin/stdout.

A logical session accumulates commands and flushes them as one
self-contained script line (prefixed with (reset) so stateful solvers
behave identically); the reply is synchronized with an (echo ...) sentinel.
Scripts are referentially transparent, so a flush whose reply looks
corrupted (the WASM backend very occasionally garbles its input string) is
simply retried. The default backend is the packaged Node server wrapping
the z3 WASM build; any conforming solver command works
(`--solver-cmd 'z3 -in'`). `emit_dir` dumps every flushed script as a
numbered, bit-exact replayable .smt2 file."""

from __future__ import annotations

import os
import pathlib
import queue
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class SolverVerdict:
    kind: str  # sat | unsat | unknown | timeout
    model: dict | None = None
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.kind == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.kind == "unsat"


def default_solver_command() -> list[str]:
    env_cmd = os.environ.get("PROBOUND_SOLVER")
    if env_cmd:
        return shlex.split(env_cmd)
    server = pathlib.Path(__file__).parent / "smt_server.cjs"
    return ["node", str(server)]


def _node_path() -> str | None:
    here = pathlib.Path(__file__).resolve()
    candidates = [
        here.parent.parent.parent.parent / "solver" / "node_modules",
        pathlib.Path.cwd() / "solver" / "node_modules",
    ]
    for c in candidates:
        if (c / "z3-solver").exists():
            return str(c)
    return os.environ.get("NODE_PATH")


@dataclass
class SolverConfig:
    command: list[str] = field(default_factory=default_solver_command)
    timeout_ms: int = 30_000
    emit_dir: str | None = None


class _Process:
    def __init__(self, command: list[str]):
        env = dict(os.environ)
        np = _node_path()
        if np:
            env["NODE_PATH"] = np
        self.proc = subprocess.Popen(
            command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, env=env, bufsize=1,
        )
        self.lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self.proc.stdout:
            self.lines.put(line.rstrip("\n"))
        self.lines.put(None)

    def send(self, chunk: str):
        self.proc.stdin.write(chunk.replace("\n", " ") + "\n")
        self.proc.stdin.flush()

    def read_until(self, sentinel: str, deadline_s: float) -> list[str] | None:
        out = []
        end = time.monotonic() + deadline_s
        while True:
            remaining = end - time.monotonic()
            if remaining <= 0:
                return None
            try:
                line = self.lines.get(timeout=remaining)
            except queue.Empty:
                return None
            if line is None:
                raise SolverError("solver process exited unexpectedly")
            if line.strip() == sentinel:
                return out
            out.append(line)

    def kill(self):
        try:
            self.proc.kill()
        except OSError:
            pass


class SolverManager:
    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self._proc: _Process | None = None
        self._sync = 0
        self._emitted = 0
        self.sessions_started = 0

    def _ensure(self) -> _Process:
        if self._proc is None or self._proc.proc.poll() is not None:
            self._proc = _Process(self.config.command)
        return self._proc

    def _restart(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc = None

    def session(self, name: str = "") -> "Session":
        self.sessions_started += 1
        return Session(self, name)

    def run_script(
        self, script: list[str], n_checks: int, timeout_ms: int | None = None,
        retries: int = 3,
    ) -> list[str] | None:
        """Evaluate one self-contained script; returns its output lines or
        None on wall-clock timeout. Corrupted replies are retried."""
        ms = timeout_ms if timeout_ms is not None else self.config.timeout_ms
        wall_s = 10.0 + (ms / 1000.0) * max(2, n_checks) * 2.0
        body = " ".join(script)
        for attempt in range(retries + 1):
            proc = self._ensure()
            self._sync += 1
            sentinel = f"done.{self._sync}"
            line = f'(reset) (set-option :timeout {ms}) {body} (echo "{sentinel}")'
            try:
                proc.send(line)
                out = proc.read_until(sentinel, wall_s)
            except (SolverError, OSError, BrokenPipeError):
                self._restart()
                continue
            if out is None:
                self._restart()
                return None
            if any("unexpected character" in ln for ln in out):
                continue  # corrupted transport; the script is replayable
            return out
        return out if out is not None else None

    def close(self):
        self._restart()


class Session:
    """One logical query session: accumulate declarations and assertions,
    then check. Every flush replays the whole accumulated script, so state
    is exactly what was added, independent of solver-process history."""

    def __init__(self, manager: SolverManager, name: str = ""):
        self.manager = manager
        self.name = name
        self.setup: list[str] = []
        self.flushed: list[list[str]] = []

    def add(self, *chunks: str):
        self.setup.extend(c for c in chunks if c.strip())

    def _flush(self, tail: list[str], n_checks: int, timeout_ms: int | None):
        script = self.setup + tail
        self.flushed.append(script)
        return self.manager.run_script(script, n_checks, timeout_ms)

    def check(self, timeout_ms: int | None = None) -> SolverVerdict:
        out = self._flush(["(check-sat)"], 1, timeout_ms)
        return _scan_verdicts(out, 1)[0]

    def check_many(
        self, blocks: list[str], timeout_ms: int | None = None,
    ) -> list[SolverVerdict]:
        """Check each block under push/pop against the accumulated setup;
        one round trip for the lot."""
        if not blocks:
            return []
        tail = []
        for b in blocks:
            tail.append(f"(push 1) {b} (check-sat) (pop 1)")
        out = self._flush(tail, len(blocks), timeout_ms)
        return _scan_verdicts(out, len(blocks))

    def check_with_values(
        self, symbols: list[str], timeout_ms: int | None = None,
    ) -> tuple[SolverVerdict, dict]:
        tail = ["(check-sat)"]
        if symbols:
            tail.append(f"(get-value ({' '.join(symbols)}))")
        out = self._flush(tail, 1, timeout_ms)
        verdict = _scan_verdicts(out, 1)[0]
        values = {}
        if verdict.is_sat and out and symbols:
            text = " ".join(
                ln for ln in out if not ln.strip().startswith("(error")
            )
            text = text.split("sat", 1)[1] if "sat" in text else text
            try:
                values = _parse_values(text)
            except SolverError:
                values = {}
        return verdict, values

    def close(self):
        cfg = self.manager.config
        if cfg.emit_dir and self.flushed:
            d = pathlib.Path(cfg.emit_dir)
            d.mkdir(parents=True, exist_ok=True)
            label = f"-{self.name}" if self.name else ""
            for script in self.flushed:
                self.manager._emitted += 1
                path = d / f"{self.manager._emitted:04d}{label}.smt2"
                path.write_text("\n".join(script) + "\n")


def _scan_verdicts(out: list[str] | None, expected: int) -> list[SolverVerdict]:
    if out is None:
        return [SolverVerdict("timeout", reason="wall clock")] * expected
    found: list[SolverVerdict] = []
    for line in out:
        s = line.strip()
        if s in ("sat", "unsat", "unknown"):
            found.append(SolverVerdict(s))
        elif s.startswith("(error") and "model is not available" not in s:
            raise SolverError(s)
    while len(found) < expected:
        found.append(SolverVerdict("unknown", reason="missing verdict"))
    return found[:expected]


# --- s-expression model parsing


def _tokenize_sexpr(text: str):
    tok = ""
    for ch in text:
        if ch in "()":
            if tok:
                yield tok
                tok = ""
            yield ch
        elif ch.isspace():
            if tok:
                yield tok
                tok = ""
        else:
            tok += ch
    if tok:
        yield tok


def _read_sexpr(tokens, tok):
    if tok != "(":
        return tok
    out = []
    for t in tokens:
        if t == ")":
            return out
        out.append(_read_sexpr(tokens, t))
    raise SolverError("unbalanced solver reply")


def _sexpr_value(e):
    if isinstance(e, str):
        if e == "true":
            return True
        if e == "false":
            return False
        if "." in e:
            return Fraction(e)
        try:
            return int(e)
        except ValueError:
            return e
    if len(e) == 2 and e[0] == "-":
        return -_sexpr_value(e[1])
    if len(e) == 3 and e[0] == "/":
        return Fraction(_sexpr_value(e[1])) / Fraction(_sexpr_value(e[2]))
    return e


def _parse_values(text: str) -> dict:
    tokens = _tokenize_sexpr(text)
    first = next(tokens, None)
    if first is None:
        return {}
    tree = _read_sexpr(tokens, first)
    out = {}
    for entry in tree:
        if isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str):
            out[entry[0]] = _sexpr_value(entry[1])
    return out
