"""CPU state tuples and the key=value state-dump format."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

from ..errors import StateSchemaError

log = logging.getLogger(__name__)

SIG_NONE = 0
SIGILL = 4
SIGTRAP = 5
SIGBUS = 7
SIGFPE = 8
SIGSEGV = 11
SIG_HANG = -1  # hang, crash or an unrecognised signal

KNOWN_SIGNALS = frozenset({SIG_NONE, SIGILL, SIGTRAP, SIGBUS, SIGFPE, SIGSEGV, SIG_HANG})
NUM_REGS = 16
FP, SP, LR, PC = 11, 13, 14, 15


def normalize_signal(sig: int) -> int:
    if sig in KNOWN_SIGNALS:
        return sig
    log.warning("unrecognised signal %d treated as crash", sig)
    return SIG_HANG


@dataclass(frozen=True)
class MemObservation:
    address: int  # offset into the scratch region
    width: int
    value: int

    def __post_init__(self):
        if self.width not in (1, 2, 4, 8):
            raise StateSchemaError(f"memory observation width {self.width} not in 1/2/4/8")
        if not 0 <= self.value < 1 << (8 * self.width):
            raise StateSchemaError(f"value {self.value:#x} does not fit {self.width} bytes")


@dataclass(frozen=True)
class CpuState:
    """Final state of one execution.

    ``pc`` is the offset from the payload instruction's address so that
    address-space layout differences between backends cannot show up as a
    divergence.
    """

    pc: int = 0
    regs: Tuple[int, ...] = (0,) * NUM_REGS
    sta: int = 0  # NZCV, N in bit 3
    mem: Tuple[MemObservation, ...] = ()
    sig: int = SIG_NONE

    def __post_init__(self):
        if self.sig not in KNOWN_SIGNALS:
            raise StateSchemaError(f"signal {self.sig} is not a normalized signal number")
        if not 0 <= self.sta < 16:
            raise StateSchemaError(f"nzcv {self.sta} is not 4 bits")
        object.__setattr__(self, "regs", tuple(self.regs))
        object.__setattr__(self, "mem", tuple(sorted(self.mem, key=lambda m: (m.address, m.width))))

    @classmethod
    def hang(cls) -> "CpuState":
        return cls(sig=SIG_HANG)

    @property
    def is_sentinel(self) -> bool:
        return self.sig == SIG_HANG

    @property
    def nzcv(self) -> str:
        return format(self.sta, "04b")


@dataclass(frozen=True)
class InitialStateSpec:
    """Initial state both backends must establish before the payload runs.

    General registers are zero except FP (r11), SP (r13), LR (r14) and PC,
    which keep the values the process needs. The scratch region is zero
    filled and is the only memory compared.
    """

    scratch_base: int = 0x0010_0000
    scratch_size: int = 4096
    preserved: Tuple[int, ...] = field(default=(FP, SP, LR, PC))

    def zeroed_registers(self) -> Tuple[int, ...]:
        return tuple(i for i in range(NUM_REGS) if i not in self.preserved)

    def check(self, state: CpuState) -> None:
        for m in state.mem:
            if not (0 <= m.address and m.address + m.width <= self.scratch_size):
                raise StateSchemaError(f"memory observation at {m.address:#x} outside the scratch region")


def parse_dump(text: str) -> CpuState:
    """Parse a state dump (``sig=``, ``pc_off=``, ``r0..r15=``, ``nzcv=``, ``mem=``)."""
    sig: Optional[int] = None
    pc = None
    sta = None
    regs = {}
    mem = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise StateSchemaError(f"line {number}: expected key=value")
        key, value = key.strip(), value.strip()
        try:
            if key == "sig":
                sig = normalize_signal(int(value))
            elif key == "pc_off":
                pc = int(value, 16)
            elif key == "nzcv":
                if len(value) != 4 or set(value) - {"0", "1"}:
                    raise ValueError(value)
                sta = int(value, 2)
            elif key == "mem":
                off, width, val = value.split(":")
                mem.append(MemObservation(int(off, 16), int(width), int(val, 16)))
            elif key.startswith("r") and key[1:].isdigit():
                idx = int(key[1:])
                if idx >= NUM_REGS:
                    raise StateSchemaError(f"line {number}: register {key} out of range")
                regs[idx] = int(value, 16)
            else:
                raise StateSchemaError(f"line {number}: unknown key {key!r}")
        except ValueError:
            raise StateSchemaError(f"line {number}: bad value for {key}: {value!r}") from None
    if sig is None:
        raise StateSchemaError("dump has no sig= line")
    if sig == SIG_HANG:
        return CpuState.hang()
    missing = [f"r{i}" for i in range(NUM_REGS) if i not in regs]
    if pc is None or sta is None or missing:
        raise StateSchemaError(f"incomplete dump: missing {(['pc_off'] if pc is None else []) + (['nzcv'] if sta is None else []) + missing}")
    return CpuState(pc, tuple(regs[i] for i in range(NUM_REGS)), sta, tuple(mem), sig)


def format_dump(state: CpuState) -> str:
    lines = [f"sig={state.sig}"]
    if state.sig != SIG_HANG:
        lines.append(f"pc_off={state.pc:x}")
        lines += [f"r{i}={v:x}" for i, v in enumerate(state.regs)]
        lines.append(f"nzcv={state.nzcv}")
        lines += [f"mem={m.address:x}:{m.width}:{m.value:x}" for m in state.mem]
    return "\n".join(lines) + "\n"


def read_dump(path) -> CpuState:
    with open(path, encoding="utf-8") as fh:
        return parse_dump(fh.read())


def write_dump(path, state: CpuState) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_dump(state))


def registers(values: Iterable[int] = (), **named) -> Tuple[int, ...]:
    """Convenience builder: ``registers(r0=5, r13=0x100)``."""
    regs = list(values) or [0] * NUM_REGS
    for k, v in named.items():
        regs[int(k[1:])] = v
    return tuple(regs)
