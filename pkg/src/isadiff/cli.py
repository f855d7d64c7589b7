"""Command-line front end: generate, annotate, diff, report.

Exit codes: 0 success, 1 usage, 2 validation, 3 backend failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .asl.evaluator import eval_decode
from .diff.backends import backend_from_descriptor
from .diff.campaign import CampaignConfig, report_from_journal, run_campaign
from .errors import BackendError, IsaDiffError, UnknownEncoding, ValidationError
from .mutation import (
    GenerationResult, emit_streams, generate, read_header, read_streams, streams_to_text,
)
from .spec_ingest import ISET_WIDTHS, InstructionSpec, load_corpus

log = logging.getLogger("isadiff")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_BACKEND = 0, 1, 2, 3
ISETS = tuple(ISET_WIDTHS)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_corpus() -> str:
    return str(resources.files("isadiff.data").joinpath("fixture_corpus.isa"))


def read_config_file(path) -> Dict[str, str]:
    """``key=value`` lines; ``#`` comments; keys use flag names (``backend-e`` or ``backend_e``)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{number}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def load_init_sets(value: Optional[str]) -> Dict[str, Dict[str, list]]:
    """JSON ``{encoding_id: {field: [values]}}`` from a path or a bundled name."""
    if not value:
        return {}
    path = Path(value)
    if not path.exists():
        bundled = resources.files("isadiff.data").joinpath(f"{value}.json")
        if not bundled.is_file():
            raise UsageError(f"init-sets file {value!r} not found")
        return json.loads(bundled.read_text())
    return json.loads(path.read_text(encoding="utf-8"))


def select_specs(specs: Sequence[InstructionSpec], iset: str, encoding: Optional[str]) -> List[InstructionSpec]:
    out = [s for s in specs if iset == "all" or s.encoding.iset == iset]
    if encoding:
        out = [s for s in out if s.encoding_id == encoding]
        if not out:
            raise UnknownEncoding(f"no encoding {encoding!r} in the corpus (iset={iset})")
    return out


# -- generate --------------------------------------------------------------


def _generate_one(args):
    spec, seed, overrides = args
    return generate(spec, rng_seed=seed, init_overrides=overrides)


def run_generation(specs: Sequence[InstructionSpec], seed: int, init_sets: Dict, workers: int = 1
                   ) -> List[GenerationResult]:
    jobs = [(s, seed, init_sets.get(s.encoding_id)) for s in specs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_generate_one, jobs))
    return [_generate_one(j) for j in jobs]


def generation_summary(results: Sequence[GenerationResult], elapsed: Dict[str, float]) -> Dict[str, Dict]:
    """Per-iset and total statistics in the GIS/VIS/AE/CE/AI/CI layout."""
    rows: Dict[str, Dict] = {}
    groups: Dict[str, List[GenerationResult]] = {}
    for r in results:
        groups.setdefault(r.spec.encoding.iset, []).append(r)
    for iset in [i for i in ISETS if i in groups] + ["total"]:
        rs = results if iset == "total" else groups[iset]
        gis = sum(len(r.streams) for r in rs)
        vis = sum(1 for r in rs for s in r.streams if r.spec.encoding.matches(s.word))
        ae = len(rs)
        ce = sum(1 for r in rs if r.streams)
        names = {r.spec.encoding.instruction_name for r in rs}
        covered = {r.spec.encoding.instruction_name for r in rs if r.streams}
        rows[iset] = {
            "time_s": round(sum(elapsed.values()) if iset == "total" else elapsed.get(iset, 0.0), 3),
            "GIS": gis, "VIS": vis, "VISR": _ratio(vis, gis),
            "AE": ae, "CE": ce, "CER": _ratio(ce, ae),
            "AI": len(names), "CI": len(covered), "CIR": _ratio(len(covered), len(names)),
            "solved_constraints": sum(r.solved_count for r in rs),
            "total_constraints": sum(len(r.solved) + len(r.unsolved) for r in rs),
        }
    return rows


def _ratio(n, d):
    return round(100.0 * n / d, 1) if d else 0.0


def format_summary(rows: Dict[str, Dict], seed: int) -> str:
    cols = ["GIS", "VIS", "VISR", "AE", "CE", "CER", "AI", "CI", "CIR", "solved_constraints"]
    head = f"{'iset':<7}{'time_s':>8}" + "".join(f"{c if c != 'solved_constraints' else 'solved':>9}" for c in cols)
    lines = [f"# seed={seed}", head]
    for iset, row in rows.items():
        lines.append(f"{iset:<7}{row['time_s']:>8}" + "".join(f"{row[c]:>9}" for c in cols))
    return "\n".join(lines) + "\n"


def cmd_generate(args) -> int:
    corpus = args.corpus or default_corpus()
    specs = select_specs(load_corpus(corpus), args.iset, args.encoding)
    init_sets = load_init_sets(args.init_sets)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not specs:
        log.warning("corpus %s has no encodings for iset=%s; nothing generated", corpus, args.iset)
    elapsed: Dict[str, float] = {}
    results = []
    for iset in ISETS:
        group = [s for s in specs if s.encoding.iset == iset]
        if not group:
            continue
        t0 = time.perf_counter()
        results += run_generation(group, args.seed, init_sets, args.workers)
        elapsed[iset] = time.perf_counter() - t0
    order = {s.encoding_id: i for i, s in enumerate(specs)}
    results.sort(key=lambda r: order[r.spec.encoding_id])

    header = {"seed": args.seed, "corpus": Path(corpus).name, "iset": args.iset}
    if args.encoding:
        header["encoding"] = args.encoding
    if args.init_sets:
        header["init_sets"] = Path(args.init_sets).name
    streams_path = out_dir / "streams.tsv"
    with open(streams_path, "w", encoding="utf-8", newline="\n") as fh:
        count = emit_streams((s for r in results for s in r.streams), fh, header)

    rows = generation_summary(results, elapsed)
    summary = {
        "seed": args.seed,
        "corpus": str(corpus),
        "streams": count,
        "isets": rows,
        "encodings": {r.spec.encoding_id: {
            "streams": len(r.streams),
            "set_sizes": [len(ms) for ms in r.sets],
            "solved": r.solved_count,
            "unsolved": len(r.unsolved),
            "skipped_guards": r.skipped,
        } for r in results},
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(format_summary(rows, args.seed))
    sys.stdout.write(f"wrote {count} streams to {streams_path}\n")
    return EXIT_OK


# -- annotate --------------------------------------------------------------


def annotate_streams(streams, specs: Dict[str, InstructionSpec]):
    """Fill missing decode tags and check present ones against the corpus."""
    out = []
    for s in streams:
        spec = specs.get(s.encoding_id)
        if spec is None:
            raise UnknownEncoding(f"stream {s.hex} names unknown encoding {s.encoding_id!r}")
        assignment = spec.encoding.decode(s.word)
        tag = eval_decode(spec.decode_ast, assignment).tag
        if s.decode_tag is not None and s.decode_tag != tag:
            raise ValidationError(f"stream {s.hex} tagged {s.decode_tag} but decodes as {tag}",
                                  s.encoding_id)
        out.append(replace(s, assignment=assignment, decode_tag=tag))
    return out


def cmd_annotate(args) -> int:
    specs = {s.encoding_id: s for s in load_corpus(args.corpus or default_corpus())}
    streams = annotate_streams(read_streams(args.streams), specs)
    header = read_header(args.streams) or None
    text = streams_to_text(streams, header)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- diff / report -------------------------------------------------------


def cmd_diff(args) -> int:
    if not args.backend_e or not args.backend_r:
        raise UsageError("diff needs --backend-e and --backend-r (replay:<dir> or process:<command>)")
    specs = {s.encoding_id: s for s in load_corpus(args.corpus or default_corpus())}
    streams = read_streams(args.streams)
    header = read_header(args.streams)
    seed = int(header.get("seed", args.seed))
    try:
        backend_e = backend_from_descriptor(args.backend_e, "emulator")
        backend_r = backend_from_descriptor(args.backend_r, "reference")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    journal = args.journal or str(Path(args.out) / "journal.jsonl")
    Path(journal).parent.mkdir(parents=True, exist_ok=True)
    config = CampaignConfig(timeout=args.timeout, workers=args.workers, seed=seed,
                            journal_path=journal, resume=args.resume)
    report = run_campaign(streams, backend_e, backend_r, config, specs)
    _emit_report(report, args.json)
    return EXIT_OK


def cmd_report(args) -> int:
    specs = None
    if args.corpus:
        specs = {s.encoding_id: s for s in load_corpus(args.corpus)}
    report = report_from_journal(args.journal, specs)
    _emit_report(report, args.json)
    return EXIT_OK


def _emit_report(report, json_path):
    sys.stdout.write(report.render_table())
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- argument parsing ----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isadiff", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key=value file supplying defaults for any option")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--corpus", help="corpus file (default: bundled fixture corpus)")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    g = sub.add_parser("generate", help="build instruction streams from the corpus")
    common(g)
    g.add_argument("--iset", choices=ISETS + ("all",), default="all")
    g.add_argument("--encoding", help="generate for a single encoding id")
    g.add_argument("--init-sets", help="JSON file (or bundled name) replacing initial mutation sets")
    g.add_argument("--out", default="isadiff-out", help="output directory")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("annotate", help="fill and check the decode tag column of a stream file")
    a.add_argument("streams")
    a.add_argument("--corpus")
    a.add_argument("--out", help="output file (default: stdout)")
    a.set_defaults(func=cmd_annotate)

    d = sub.add_parser("diff", help="run a differential campaign over a stream file")
    common(d)
    d.add_argument("streams")
    d.add_argument("--backend-e", help="emulator side: replay:<dir> or process:<command>")
    d.add_argument("--backend-r", help="reference side: replay:<dir> or process:<command>")
    d.add_argument("--timeout", type=float, default=5.0)
    d.add_argument("--journal", help="journal path (default: <out>/journal.jsonl)")
    d.add_argument("--out", default="isadiff-out")
    d.add_argument("--resume", action="store_true")
    d.add_argument("--json", help="also write the machine summary here")
    d.set_defaults(func=cmd_diff)

    r = sub.add_parser("report", help="summarize a campaign journal")
    r.add_argument("journal")
    r.add_argument("--corpus", help="corpus for encoding/instruction denominators")
    r.add_argument("--json", help="also write the machine summary here")
    r.set_defaults(func=cmd_report)
    return p


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = read_config_file(known.config)
        for action in parser._subparsers._group_actions[0].choices.values():
            dests = {a.dest for a in action._actions}
            action.set_defaults(**{k: _convert(action, k, v) for k, v in values.items() if k in dests})
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a command is required")
    return args


def _convert(parser, dest, value):
    for a in parser._actions:
        if a.dest == dest:
            if a.const is True:  # store_true
                return value.lower() in ("1", "true", "yes", "on")
            return a.type(value) if a.type else value
    return value


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"isadiff: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"isadiff: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"isadiff: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (IsaDiffError, OSError) as exc:
        print(f"isadiff: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
