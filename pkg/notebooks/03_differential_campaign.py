# %% [markdown]
# # A replay campaign
#
# Two directories of recorded state dumps stand in for an emulator and a
# reference device. Streams touching SP or FP are filtered before anything
# runs, and branches that finish cleanly on both sides are dropped
# afterwards. Each remaining divergence gets a likely root cause.

# %%
from pathlib import Path

from isadiff import fixture_corpus_path, load_corpus
from isadiff.diff import CampaignConfig, ReplayBackend, run_campaign
from isadiff.mutation import read_streams

root = Path.cwd()
while not (root / "tests" / "fixtures" / "golden").is_dir() and root != root.parent:
    root = root.parent
golden = root / "tests" / "fixtures" / "golden"

specs = {s.encoding_id: s for s in load_corpus(fixture_corpus_path())}
streams = read_streams(golden / "streams.tsv")
print(len(streams), "streams")
print((golden / "emu" / "STR-imm-T32-f84f0ddd.dump").read_text())

# %%
report = run_campaign(streams, ReplayBackend(golden / "emu"), ReplayBackend(golden / "real"),
                      CampaignConfig(workers=2), specs)
for rec in report.records:
    print(f"{rec.encoding_id:<13} {rec.word:<9} {rec.verdict:<13} {rec.category or '':<27} {rec.root_cause or ''}")

# %% [markdown]
# ## Aggregate table
# Stream percentages use all generated streams as the denominator, and the
# behaviour rows use the inconsistent streams. `[Enc | Inst]` counts distinct
# encodings and instructions.

# %%
print(report.render_table())

# %% [markdown]
# ## Running against a live emulator
# `ProcessBackend` renders a C harness per stream, then runs a command
# template. With an ARM cross compiler and qemu-user installed, a campaign
# could be driven like this (not executed here):
#
# ```
# isadiff diff streams.tsv \
#   --backend-e 'process:sh -c "arm-linux-gnueabihf-gcc -static -o {workdir}/t {source} && qemu-arm {workdir}/t"' \
#   --backend-r replay:device-dumps/
# ```

# %%
from isadiff.diff import InitialStateSpec, render_harness

print("\n".join(render_harness(streams[0], InitialStateSpec()).splitlines()[60:90]))
