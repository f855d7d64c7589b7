"""Rebuilds tests/fixtures/golden. The expected verdicts below are labelled by hand.

Usage: python tests/fixtures/build_golden.py tests/fixtures/golden
"""
import json, sys
from pathlib import Path
from isadiff.spec_ingest import load_corpus
from isadiff import fixture_corpus_path
from isadiff.asl.evaluator import eval_decode
from isadiff.mutation import InstructionStream, streams_to_text
from isadiff.diff.state import CpuState, MemObservation, write_dump

specs = {s.encoding_id: s for s in load_corpus(fixture_corpus_path())}
Z = (0,) * 16
def regs(**kw):
    r = list(Z)
    for k, v in kw.items(): r[int(k[1:])] = v
    return tuple(r)
ok = lambda **kw: CpuState(pc=kw.pop("pc", 4), regs=regs(**kw.pop("r", {})), sta=kw.pop("sta", 0), mem=kw.pop("mem", ()), sig=kw.pop("sig", 0))

C = []  # (eid, assignment, emu_state, real_state, verdict, category, root_cause, note)
def add(eid, a, e, r, verdict, cat, root, note):
    C.append((eid, a, e, r, verdict, cat, root, note))

seg = lambda pc=0: CpuState(pc=pc, sig=11)
ill = lambda pc=0: CpuState(pc=pc, sig=4)

add("STR-imm-T32", dict(Rn=15, Rt=0, P=1, U=0, W=1, imm8=0xdd),
    seg(), ill(), "Inconsistent", "SigBothNonzeroDiffer", "QemuBugCandidate", "Rn=15 is UNDEFINED; emulator faults on the store instead")
add("LDR-reg-A32", dict(cond=14, P=0, U=0, W=0, Rn=0, Rt=0, imm5=0, stype=0, Rm=0),
    ok(r=dict(r0=0)), seg(), "Inconsistent", "SigRealOnly", "Unpredictable", "post-indexed with n == t")
add("ADD-imm-A32", dict(cond=14, S=0, Rn=1, Rd=0, imm12=0xfff),
    ok(r=dict(r0=0xfff)), ok(r=dict(r0=0xfff)), "Consistent", None, None, "plain add, same result")
add("ADD-imm-A32", dict(cond=14, S=0, Rn=13, Rd=0, imm12=1),
    None, None, "Filtered", "SpFpAccess", None, "reads SP")
add("LDR-imm-A32", dict(cond=14, P=1, U=1, W=0, Rn=0, Rt=11, imm12=0),
    None, None, "Filtered", "SpFpAccess", None, "writes FP")
add("B-A32", dict(cond=14, imm24=0),
    ok(pc=8), ok(pc=8), "Filtered", "BranchNormal", None, "branch that completes on both sides")
add("B-A32", dict(cond=14, imm24=0xffffff),
    ok(pc=0), seg(pc=0), "Inconsistent", "SigRealOnly", "Unknown", "branch faulting only on the reference side")
add("MOV-imm-T16", dict(Rd=0, imm8=0xff),
    ok(pc=2, r=dict(r0=0xff)), ok(pc=2, r=dict(r0=0x7f)), "Inconsistent", "SigZeroStateDiffer", "Unknown", "register result differs")
add("LDR-imm-T16", dict(imm5=1, Rn=0, Rt=1),
    CpuState(sig=11, mem=(MemObservation(0, 4, 1),)), CpuState(sig=11), "Consistent", None, None, "same fault, memory ignored")
add("LDR-imm-T16", dict(imm5=31, Rn=1, Rt=0),
    CpuState(sig=11, regs=regs(r0=5)), CpuState(sig=11), "Inconsistent", "SigEqualNonzeroStateDiffer", "Unknown", "same fault, register differs")
add("WFI-T16", {},
    CpuState.hang(), ok(pc=2), "Inconsistent", "Other", "Unknown", "emulator hangs")
add("SDIV-T32", dict(Rn=0, Rd=15, Rm=1),
    ill(), ok(), "Inconsistent", "SigEmuOnly", "Unpredictable", "d == 15")
add("ADD-reg-T16", dict(Rm=0, Rn=1, Rd=2),
    ok(pc=2, sta=0b0100), ok(pc=2, sta=0), "Inconsistent", "SigZeroStateDiffer", "Unknown", "flags differ")
add("ADD-imm-A64", dict(sf=1, sh=0, imm12=7, Rn=0, Rd=1),
    ok(r=dict(r1=7)), ok(r=dict(r1=7)), "Consistent", None, None, "same result")
add("LDR-imm-A64", dict(sz=1, imm12=0, Rn=0, Rt=1),
    seg(), CpuState(sig=7), "Inconsistent", "SigBothNonzeroDiffer", "Unknown", "SEGV against BUS")
add("CBZ-A64", dict(sf=1, op=0, imm19=2, Rt=0),
    ok(pc=8), ok(pc=8), "Filtered", "BranchNormal", None, "taken branch on both sides")
add("VLD4-A32", dict(D=0, Rn=0, Vd=0, type=0, size=3, align=0, Rm=15),
    ill(), ill(), "Consistent", None, None, "size == 11 is UNDEFINED, both raise SIGILL")
add("VLD4-A32", dict(D=0, Rn=1, Vd=0, type=1, size=3, align=0, Rm=15),
    ill(pc=0), ill(pc=4), "Inconsistent", "SigEqualNonzeroStateDiffer", "Undefined", "both SIGILL, faulting pc differs")
add("STR-imm-T32", dict(Rn=0, Rt=1, P=1, U=1, W=0, imm8=4),
    seg(), seg(), "Consistent", None, None, "store to null page on both")
add("LDR-imm-A32", dict(cond=14, P=1, U=1, W=0, Rn=1, Rt=0, imm12=8),
    ok(mem=(MemObservation(8, 4, 0xff),)), ok(mem=(MemObservation(8, 4, 0),)), "Inconsistent", "SigZeroStateDiffer", "Unknown", "scratch contents differ")

def main(out: Path):
    (out / "emu").mkdir(parents=True, exist_ok=True); (out / "real").mkdir(exist_ok=True)
    streams, expected = [], []
    for eid, a, e, r, verdict, cat, root, note in C:
        spec = specs[eid]
        word = spec.encoding.encode(a)
        assignment = spec.encoding.decode(word)
        tag = eval_decode(spec.decode_ast, assignment).tag
        s = InstructionStream(eid, spec.encoding.iset, spec.encoding.width, word, assignment, tag)
        streams.append(s)
        if e is not None:
            write_dump(out / "emu" / f"{eid}-{s.hex}.dump", e)
            write_dump(out / "real" / f"{eid}-{s.hex}.dump", r)
        expected.append(dict(encoding_id=eid, word=s.hex, decode_tag=str(tag), verdict=verdict,
                             category=cat, root_cause=root, note=note))
    (out / "streams.tsv").write_text(streams_to_text(streams, {"seed": 42, "fixture": "golden"}))
    (out / "expected.json").write_text(json.dumps(expected, indent=1) + "\n")
    for x in expected:
        print(x["encoding_id"], x["word"], x["decode_tag"], x["verdict"], x["category"], x["root_cause"])


if __name__ == "__main__":
    main(Path(sys.argv[1]))
