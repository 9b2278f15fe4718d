"""Command-line front end: mine, refine, eval, fuzz, parse, stats.

Exit status is 0 on success, 1 when an input is rejected or the fuzzer
cannot produce the requested number of inputs, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .grammar import (
    BNFSyntaxError, EarleyParser, GrammarFuzzer, load_grammar, save_grammar,
    stats, to_bnf,
)
from .inference import GrammarEmpty
from .pipeline import (
    FIXTURE_ENV, MineConfig, evaluate, mine, resolve_subject,
)
from .refine import Oracle, RefinementConfig, refine
from .subjectlang.manifest import ManifestError
from .subjectlang.syntax import MiniSyntaxError
from .symexec import dump_traces

log = logging.getLogger("symparse")

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _grammar(path):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such grammar file: {path}")
    return load_grammar(p)


def _subject(spec):
    try:
        return resolve_subject(spec)
    except FileNotFoundError as e:
        raise UsageError(str(e))


def _read_samples(path):
    with open(path, encoding="utf-8") as fp:
        return [json.loads(line).encode("latin-1") for line in fp if line.strip()]


def _write_samples(samples, path):
    with open(path, "w", encoding="utf-8") as fp:
        for s in samples:
            fp.write(json.dumps(s.decode("latin-1")) + "\n")


def _input_bytes(args):
    if args.file:
        p = Path(args.file)
        if not p.exists():
            raise UsageError(f"no such input file: {args.file}")
        return p.read_bytes()
    if args.input is None:
        raise UsageError("give an input string or --file")
    return os.fsencode(args.input)


def _diagnostics(res):
    d = res.diagnostics
    return {
        "subject": res.manifest.name,
        "traces": len(res.traces),
        "accepted": d.accepted,
        "rejected": d.rejected,
        "states": d.states,
        "exhausted": d.exhausted,
        "terminated": dict(sorted(d.terminated.items())),
        "tokens": sorted(o.name for o in res.observations),
        "samples": len(res.samples),
    }


def cmd_mine(args):
    m = _subject(args.subject)
    cfg = MineConfig(args.max_input_len, args.loop_bound, args.recursion_bound,
                     seed=args.seed, merge_contexts=not args.split_contexts)
    res = mine(m, cfg)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        name = m.name
        save_grammar(res.grammar, out / f"{name}.bnf")
        save_grammar(res.grammar, out / f"{name}.json")
        if res.token_grammar is not None:
            save_grammar(res.token_grammar, out / f"{name}.tokens.bnf")
        with open(out / f"{name}.traces.jsonl", "w") as fp:
            dump_traces(res.traces, fp)
        _write_samples(res.samples, out / f"{name}.samples.jsonl")
        (out / f"{name}.diagnostics.json").write_text(
            json.dumps(_diagnostics(res), indent=2, sort_keys=True) + "\n")
        print(f"wrote {out / (name + '.bnf')}")
    else:
        sys.stdout.write(to_bnf(res.grammar))
    st = stats(res.grammar)
    print(f"traces\t{len(res.traces)}\nNT\tRA\tl(RA)\tS\n{st.row()}", file=sys.stderr)
    return EXIT_OK


def cmd_refine(args):
    g = _grammar(args.grammar)
    m = _subject(args.subject)
    cfg = RefinementConfig(candidates=args.candidates, corpus_size=args.corpus_size,
                           attempts=args.attempts, seed=args.seed, rounds=args.rounds)
    extra = _read_samples(args.samples) if args.samples else None
    refined, rep = refine(g, Oracle(m.load_program()), cfg, extra_valid=extra)
    if args.log:
        for c in rep.log:
            mark = "accepted" if c.accepted else "rejected"
            print(f"{mark}\tlevel {c.level}\t<{c.nonterminal}>\t{c.input!r}\t"
                  + c.rule.replace("\n", " "))
    print(rep.summary())
    if args.out:
        out = Path(args.out)
        base = out.with_suffix("") if out.suffix in (".bnf", ".json") else out
        base.parent.mkdir(parents=True, exist_ok=True)
        save_grammar(refined, base.with_suffix(".bnf"))
        save_grammar(refined, base.with_suffix(".json"))
    else:
        sys.stdout.write(to_bnf(refined))
    return EXIT_OK


def cmd_eval(args):
    g = _grammar(args.grammar)
    m = _subject(args.subject)
    golden_path = args.golden or m.golden_path()
    if golden_path is None:
        raise UsageError(f"subject {m.name} has no golden grammar; pass --golden")
    gold = _grammar(golden_path)
    res = evaluate(g, gold, Oracle(m.load_program()), args.n, args.seed,
                   args.max_depth)
    print("\n".join(res.lines()))
    return EXIT_OK


def cmd_fuzz(args):
    g = _grammar(args.grammar)
    res = GrammarFuzzer(g, args.seed, args.max_depth).fuzz(args.n)
    lines = [json.dumps(x.decode("latin-1")) for x in res.inputs]
    if args.out:
        Path(args.out).write_text("".join(s + "\n" for s in lines))
    else:
        for s in lines:
            print(s)
    if res.exhausted:
        print(f"underflow: {len(res.inputs)} of {args.n} distinct inputs",
              file=sys.stderr)
        return EXIT_REJECT
    return EXIT_OK


def cmd_parse(args):
    g = _grammar(args.grammar)
    data = _input_bytes(args)
    ok, furthest = EarleyParser(g).recognize(data)
    if ok:
        print("accepted")
        return EXIT_OK
    print(f"rejected at position {furthest}")
    return EXIT_REJECT


def cmd_stats(args):
    print("grammar\tNT\tRA\tl(RA)\tS")
    for path in args.grammars:
        print(f"{path}\t{stats(_grammar(path)).row()}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="symparse",
        description="Mine input grammars from mini-language parsers. "
                    f"${FIXTURE_ENV} overrides the bundled data directory.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("mine", help="mine a grammar from a subject"))
    p.add_argument("subject", help="manifest, .mini file or bundled subject name")
    p.add_argument("--loop-bound", type=_positive)
    p.add_argument("--recursion-bound", type=_positive)
    p.add_argument("--max-input-len", type=_positive)
    p.add_argument("--split-contexts", action="store_true",
                   help="keep one nonterminal per call-site context")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_mine)

    p = common(sub.add_parser("refine", help="repair overapproximations"))
    p.add_argument("grammar")
    p.add_argument("subject")
    p.add_argument("--candidates", type=_positive, default=1000)
    p.add_argument("--corpus-size", type=_positive, default=500)
    p.add_argument("--attempts", type=_positive, default=20)
    p.add_argument("--rounds", type=_positive, default=1)
    p.add_argument("--samples", help="known-valid inputs (.samples.jsonl from mine)")
    p.add_argument("--log", action="store_true", help="print every candidate update")
    p.add_argument("--out", help="output path (writes .bnf and .json)")
    p.set_defaults(func=cmd_refine)

    p = common(sub.add_parser("eval", help="precision and recall"))
    p.add_argument("grammar")
    p.add_argument("subject")
    p.add_argument("--golden")
    p.add_argument("-n", type=_positive, default=1000)
    p.add_argument("--max-depth", type=_positive, default=12)
    p.set_defaults(func=cmd_eval)

    p = common(sub.add_parser("fuzz", help="generate inputs from a grammar"))
    p.add_argument("grammar")
    p.add_argument("-n", type=_positive, default=10)
    p.add_argument("--max-depth", type=_positive, default=12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fuzz)

    p = common(sub.add_parser("parse", help="check an input against a grammar"))
    p.add_argument("grammar")
    p.add_argument("input", nargs="?")
    p.add_argument("--file")
    p.set_defaults(func=cmd_parse)

    p = common(sub.add_parser("stats", help="readability metrics"))
    p.add_argument("grammars", nargs="+")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"symparse {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BNFSyntaxError, ManifestError, MiniSyntaxError, GrammarEmpty,
            ValueError, OSError) as e:
        print(f"symparse {args.command}: error: {e}", file=sys.stderr)
        return EXIT_REJECT


if __name__ == "__main__":
    sys.exit(main())
