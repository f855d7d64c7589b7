"""Executor backends: state-dump replay, an external-process adapter and a
scripted in-memory backend for tests and demos."""
from __future__ import annotations

import logging
import os
import shlex
import signal
import subprocess
import tempfile
from importlib import resources
from pathlib import Path
from string import Template
from typing import Mapping, Optional, Protocol, Tuple

from ..errors import BackendError, StateSchemaError
from .state import CpuState, InitialStateSpec, parse_dump, read_dump

log = logging.getLogger(__name__)


class ExecutorBackend(Protocol):
    name: str

    def run(self, stream, init: InitialStateSpec, timeout: float) -> CpuState: ...


def dump_name(stream) -> str:
    return f"{stream.encoding_id}-{stream.hex}.dump"


class ReplayBackend:
    """Reads ``<encoding_id>-<hex>.dump`` files recorded elsewhere."""

    def __init__(self, directory, name: Optional[str] = None):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise BackendError(f"replay directory {self.directory} does not exist")
        self.name = name or f"replay:{self.directory}"

    def run(self, stream, init: InitialStateSpec, timeout: float) -> CpuState:
        path = self.directory / dump_name(stream)
        try:
            state = read_dump(path)
        except FileNotFoundError:
            raise BackendError(f"{self.name}: no recorded state {path.name}") from None
        init.check(state)
        return state


class ScriptedBackend:
    """Answers from a mapping ``(encoding_id, word) -> CpuState``."""

    def __init__(self, states: Mapping[Tuple[str, int], CpuState], default: Optional[CpuState] = None,
                 name: str = "scripted"):
        self.states = dict(states)
        self.default = default
        self.name = name

    def run(self, stream, init: InitialStateSpec, timeout: float) -> CpuState:
        state = self.states.get((stream.encoding_id, stream.word), self.default)
        if state is None:
            raise BackendError(f"{self.name}: no scripted state for {stream.encoding_id} {stream.hex}")
        return state


# -- harness rendering ----------------------------------------------------

_THUMB = {"T32": (".thumb\\n.thumb_func", ".inst.w 0x{:08x}", ".inst.n 0xde00"),
          "T16": (".thumb\\n.thumb_func", ".inst.n 0x{:04x}", ".inst.n 0xde00")}
_ARM = (".arm", ".inst 0x{:08x}", ".inst 0xe7f000f0")


def render_harness(stream, init: InitialStateSpec) -> str:
    """C source that zeroes registers, runs the stream once and prints a state dump."""
    if stream.iset == "A64":
        text = resources.files("isadiff.data").joinpath("harness_a64.c.tmpl").read_text()
        mode, inst, trap = "", ".inst 0x{:08x}", ".inst 0x00000000"
    else:
        text = resources.files("isadiff.data").joinpath("harness_aarch32.c.tmpl").read_text()
        mode, inst, trap = _THUMB.get(stream.iset, _ARM)
    return Template(text).substitute(
        encoding_id=stream.encoding_id,
        word=stream.hex,
        iset=stream.iset,
        scratch_base=hex(init.scratch_base),
        scratch_size=init.scratch_size,
        mode_directive=mode,
        inst_directive=inst.format(stream.word),
        trap_directive=trap,
    )


class ProcessBackend:
    """Runs a user-supplied command per stream and parses its stdout as a dump.

    The command is a template; ``{source}`` (rendered harness), ``{payload}``
    (raw stream bytes), ``{workdir}``, ``{iset}``, ``{word}`` and
    ``{encoding_id}`` are substituted into each argument, e.g.::

        sh -c "arm-linux-gnueabihf-gcc -static -o {workdir}/t {source} && qemu-arm {workdir}/t"
    """

    def __init__(self, command: str, name: Optional[str] = None, workdir=None):
        self.argv = shlex.split(command)
        if not self.argv:
            raise BackendError("empty process backend command")
        self.name = name or f"process:{self.argv[0]}"
        self.workdir = workdir

    def run(self, stream, init: InitialStateSpec, timeout: float) -> CpuState:
        with tempfile.TemporaryDirectory(prefix="isadiff-", dir=self.workdir) as wd:
            source = os.path.join(wd, "harness.c")
            payload = os.path.join(wd, "payload.bin")
            with open(source, "w", encoding="utf-8") as fh:
                fh.write(render_harness(stream, init))
            with open(payload, "wb") as fh:
                fh.write(stream.to_bytes())
            fields = dict(source=source, payload=payload, workdir=wd, iset=stream.iset,
                          word=stream.hex, encoding_id=stream.encoding_id)
            argv = [a.format(**fields) for a in self.argv]
            try:
                proc = subprocess.Popen(argv, cwd=wd, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                                        text=True, start_new_session=True)
            except OSError as exc:
                raise BackendError(f"{self.name}: cannot launch {argv[0]}: {exc}") from exc
            try:
                out, err = proc.communicate(timeout=timeout)
            except subprocess.TimeoutExpired:
                _kill_group(proc)
                log.info("%s: %s %s timed out", self.name, stream.encoding_id, stream.hex)
                return CpuState.hang()
        if proc.returncode in (126, 127) and not out.strip():
            raise BackendError(f"{self.name}: command failed to start: {err.strip()}")
        try:
            state = parse_dump(out)
            init.check(state)
        except StateSchemaError as exc:
            log.warning("%s: %s %s produced no usable dump (%s)", self.name,
                        stream.encoding_id, stream.hex, exc)
            return CpuState.hang()
        return state


def _kill_group(proc):
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except OSError:
        proc.kill()
    proc.communicate()


def backend_from_descriptor(descriptor: str, name: Optional[str] = None) -> ExecutorBackend:
    """``replay:<dir>`` or ``process:<command template>``."""
    kind, sep, arg = descriptor.partition(":")
    if not sep or not arg:
        raise ValueError(f"backend descriptor {descriptor!r} is not kind:argument")
    if kind == "replay":
        return ReplayBackend(arg, name)
    if kind == "process":
        return ProcessBackend(arg, name)
    raise ValueError(f"unknown backend kind {kind!r}")
