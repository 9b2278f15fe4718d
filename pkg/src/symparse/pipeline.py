"""Mining and evaluation pipelines shared by the CLI and the tests."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .grammar import EarleyParser, GrammarFuzzer, load_grammar, simplify
from .inference import merge_contexts, traces_to_grammar
from .refine import Oracle, RefinementConfig, refine
from .subjectlang import load_manifest
from .symexec import (
    ExploreConfig, analyze_tokenizer, explore, explore_with_proxy,
    trace_samples,
)
from .tokens import generalize_tokens, strip_ws, token_grammar

FIXTURE_ENV = "SYMPARSE_FIXTURES"
SUBJECTS = ("calc", "cgidecode", "json", "lisp", "tinyc")


def data_dir():
    """Bundled data directory, or the one named by ``$SYMPARSE_FIXTURES``."""
    env = os.environ.get(FIXTURE_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("symparse").joinpath("data")))


def resolve_subject(spec):
    """Manifest for a path (``.manifest``/``.mini``) or a bundled subject name."""
    p = Path(spec)
    if p.exists():
        return load_manifest(p)
    for cand in (data_dir() / spec, data_dir() / "subjects" / f"{spec}.manifest"):
        if cand.exists():
            return load_manifest(cand)
    raise FileNotFoundError(f"no subject {spec!r} (looked in {cand.parent})")


def fixture_path(name):
    return data_dir() / "fixtures" / name


@dataclass
class MineConfig:
    max_input_len: int | None = None
    loop_bound: int | None = None
    recursion_bound: int | None = None
    max_states: int | None = None
    seed: int = 0
    merge_contexts: bool = True
    optional: bool = True


@dataclass
class MineResult:
    manifest: object
    grammar: object
    raw: object
    traces: list
    diagnostics: object
    observations: list = field(default_factory=list)
    token_grammar: object = None
    samples: list = field(default_factory=list)

    @property
    def token_names(self):
        return {o.token_id: o.name for o in self.observations}


def explore_config(manifest, cfg):
    return ExploreConfig(
        loop_bound=cfg.loop_bound or manifest.loop_bound,
        recursion_bound=cfg.recursion_bound or manifest.recursion_bound,
        max_input_len=cfg.max_input_len or manifest.max_input_len,
        max_states=cfg.max_states or manifest.max_states,
    )


def mine(manifest, cfg=None):
    """Explore, infer, generalize tokens and simplify."""
    cfg = cfg or MineConfig()
    program = manifest.load_program()
    ecfg = explore_config(manifest, cfg)
    observations = []
    tok_inst = None
    if manifest.tokenizer:
        tcfg = ExploreConfig(ecfg.loop_bound, ecfg.recursion_bound,
                             manifest.tokenizer_max_input_len, ecfg.max_states)
        observations = analyze_tokenizer(program, manifest, tcfg, cfg.seed)
        traces, diag = explore_with_proxy(program, manifest, observations, ecfg)
        tok_inst = {o.token_id: sorted(strip_ws(i)[1] for i in o.instances)
                    for o in observations}
    else:
        traces, diag = explore(program, ecfg)
    names = {o.token_id: o.name for o in observations}
    raw = traces_to_grammar(traces, names)
    g = merge_contexts(raw) if cfg.merge_contexts else raw
    if observations:
        g = generalize_tokens(g, observations)
    final = simplify(g, optional=cfg.optional)
    oracle = Oracle(program)
    samples = trace_samples(traces, oracle, cfg.seed, tok_inst)
    return MineResult(manifest, final, raw, traces, diag, observations,
                      token_grammar(observations) if observations else None,
                      samples)


def refine_mined(result, rcfg=None):
    """Refine a :class:`MineResult` against its subject."""
    program = result.manifest.load_program()
    return refine(result.grammar, Oracle(program), rcfg or RefinementConfig(),
                  extra_valid=result.samples)


@dataclass
class AccuracyResult:
    precision: float
    recall: float
    n_precision: int
    n_recall: int

    @property
    def f1(self):
        return f1_score(self.precision, self.recall)

    def lines(self):
        return [f"precision\t{self.precision:.4f}\t(n={self.n_precision})",
                f"recall\t{self.recall:.4f}\t(n={self.n_recall})",
                f"f1\t{self.f1:.4f}"]


def f1_score(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def accepted_sample(grammar, oracle, n, seed, max_depth=12):
    """Up to ``n`` distinct inputs from ``grammar`` that the subject accepts."""
    fz = GrammarFuzzer(grammar, seed, max_depth)
    seen, out = set(), []
    attempts = 0
    while len(out) < n and attempts < 50 * n:
        attempts += 1
        s = fz.generate().text()
        if s in seen:
            continue
        seen.add(s)
        if oracle(s):
            out.append(s)
    return out


def evaluate(mined, golden, oracle, n=1000, seed=0, max_depth=12):
    """Precision against the subject, recall against golden-grammar inputs."""
    res = GrammarFuzzer(mined, seed, max_depth).fuzz(n)
    prec = (sum(1 for x in res.inputs if oracle(x)) / len(res.inputs)
            if res.inputs else 0.0)
    gold = accepted_sample(golden, oracle, n, seed + 1, max_depth)
    parser = EarleyParser(mined)
    rec = sum(1 for x in gold if parser.accepts(x)) / len(gold) if gold else 0.0
    return AccuracyResult(prec, rec, len(res.inputs), len(gold))


def evaluate_subject(grammar, manifest, n=1000, seed=0, golden=None):
    program = manifest.load_program()
    gold = golden if golden is not None else load_grammar(manifest.golden_path())
    return evaluate(grammar, gold, Oracle(program), n, seed)


def mine_and_refine(name, mcfg=None, rcfg=None):
    """Bundled-subject convenience: (mine result, refined grammar, report)."""
    m = resolve_subject(name)
    res = mine(m, mcfg)
    g, rep = refine_mined(res, rcfg)
    return res, g, rep
