"""Compare the Cython and pure-Python Earley kernels.

    python benchmarks/bench_earley.py [-n 200] [--repeat 3]

Parses golden-grammar samples of every bundled subject with both kernels,
checks that the verdicts agree and prints inputs per second.
"""
import argparse
import time

from symparse.grammar import KERNEL, EarleyParser, GrammarFuzzer, load_grammar
from symparse.pipeline import SUBJECTS, resolve_subject


def workload(name, n, seed):
    g = load_grammar(resolve_subject(name).golden_path())
    xs = GrammarFuzzer(g, seed, 12).fuzz(n).inputs
    # mutate every other sample so rejections are timed too
    xs = [x if i % 2 else x[: len(x) // 2] + b"@" + x[len(x) // 2:] for i, x in enumerate(xs)]
    return g, xs


def run(parser, xs, repeat):
    best = float("inf")
    verdicts = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        verdicts = [parser.accepts(x) for x in xs]
        best = min(best, time.perf_counter() - t0)
    return best, verdicts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if KERNEL != "cython":
        print("compiled kernel not available; only the Python kernel can run")
    kernels = ["python"] + (["cython"] if KERNEL == "cython" else [])
    print(f"{'subject':10} {'inputs':>6} {'bytes':>7} "
          + " ".join(f"{k + ' in/s':>12}" for k in kernels) + "  speedup")
    for name in SUBJECTS:
        g, xs = workload(name, args.n, args.seed)
        times, seen = {}, []
        for k in kernels:
            times[k], v = run(EarleyParser(g, k), xs, args.repeat)
            seen.append(v)
        assert all(v == seen[0] for v in seen), f"kernels disagree on {name}"
        rates = " ".join(f"{len(xs) / times[k]:12.0f}" for k in kernels)
        sp = f"{times['python'] / times['cython']:7.1f}x" if "cython" in times else "      -"
        print(f"{name:10} {len(xs):6d} {sum(map(len, xs)):7d} {rates}  {sp}")


if __name__ == "__main__":
    main()
