# %% [markdown]
# # From decode pseudocode to 5,760 VLD4 streams
#
# Walk through generation for the A32 VLD4 encoding. Guards are pulled out
# of the pseudocode and rewritten over encoding symbols. Each guard is then
# solved in both directions, and the witnesses widen the per-field
# candidate sets.

# %%
import json
from importlib import resources

from isadiff import fixture_corpus_path, load_corpus
from isadiff.asl import Polarity, backward_slice, extract_constraints, symbolize_in
from isadiff.asl.nodes import VarRef, to_text
from isadiff.solver import solve_both

vld4 = next(s for s in load_corpus(fixture_corpus_path()) if s.encoding_id == "VLD4-A32")
print(vld4.decode_text)

# %% [markdown]
# ## Guards
# Branch conditions and `case` arms both contribute guards, as do boolean
# assignments such as `wback`. Only the asserted side is listed here; each
# guard also has a negated twin.

# %%
guards = [c for c in extract_constraints(vld4.program) if c.polarity is Polarity.ASSERT]
for c in guards:
    print(f"{to_text(c.expr):<32} path={[to_text(p) for p in c.path_condition]}")

# %% [markdown]
# ## Slicing and rewriting `d4 > 31`
# The slice keeps only the statements that feed `d4`. The `case` on `type`
# turns `inc` into an auxiliary symbol limited to the values its arms assign.

# %%
for stmt in backward_slice(vld4.decode_ast, VarRef("d4")).statements:
    print(type(stmt).__name__, getattr(stmt, "target", ""))

d4 = next(c for c in guards if to_text(c.expr) == "d4 > 31")
sym = symbolize_in(vld4.program, d4)
print("rewritten:", to_text(sym.expr))
print("side:", [to_text(s) for s in sym.side_constraints])

# %%
pos, neg = solve_both(sym)
print("assert:", pos.assignment)
print("negate:", neg.assignment)

# %% [markdown]
# ## Mutation sets and the Cartesian product
# The bundled init file pins the random draws to known values so that the
# final set sizes can be compared with a published table.

# %%
from isadiff.mutation import generate

init = json.loads(resources.files("isadiff.data").joinpath("vld4_pinned_init.json").read_text())
result = generate(vld4, rng_seed=42, init_overrides=init["VLD4-A32"])
for ms in result.sets:
    added = [b for b, o in zip(ms.bit_strings(), ms.origins) if o.value == "Solved"]
    print(f"{ms.field.label:<14} size={len(ms)}  solved adds {added}")
print("streams:", len(result.streams))

# %%
from collections import Counter

print(Counter(s.decode_tag.value for s in result.streams))
