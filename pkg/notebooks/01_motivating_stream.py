# %% [markdown]
# # One Thumb-2 store that QEMU mishandles
#
# The 32-bit word `0xf84f0ddd` sits inside the STR (immediate) T32 encoding.
# Its base register field is `1111`, which the decode pseudocode rejects as
# UNDEFINED. A real core raises SIGILL. An emulator that skips this check
# executes the store and faults with SIGSEGV instead.

# %%
from isadiff import fixture_corpus_path, load_corpus
from isadiff.asl import eval_decode

specs = {s.encoding_id: s for s in load_corpus(fixture_corpus_path())}
store = specs["STR-imm-T32"]
print(store.decode_text)

# %% [markdown]
# Decoding places each field of the diagram back into a symbol value.

# %%
fields = store.encoding.decode(0xF84F0DDD)
print(fields)
outcome = eval_decode(store.decode_ast, fields)
print("decode tag:", outcome.tag)

# %% [markdown]
# The same comparison the campaign runner performs, with the two final
# states written out by hand.

# %%
from isadiff.diff import CpuState, classify_root_cause, compare_final
from isadiff.mutation import InstructionStream

stream = InstructionStream(store.encoding_id, "T32", 32, 0xF84F0DDD, fields, outcome.tag)
emulator, device = CpuState(sig=11), CpuState(sig=4)
verdict = compare_final(emulator, device)
print(verdict.kind.value, verdict.category.value)
print("root cause:", classify_root_cause(stream, store, verdict).value)

# %% [markdown]
# The bytes a harness would place in memory: two little-endian halfwords,
# leading halfword first.

# %%
print(stream.to_bytes().hex(" "))
