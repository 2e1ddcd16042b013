"""Command-line entry point: ``coordcert <subcommand> ...``.

Every subcommand writes CSV, JSON or plain text to stdout or, with
``--out``, atomically to a file.  Exit status is 0 on success, 2 on bad
input and 3 when an internal consistency check fails.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dag as dagmod
from . import inflation, inequalities, noise, opt, quantum, witness
from .errors import CoordError, InvariantError, OutOfRegionError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_INVARIANT = 0, 2, 3


def threads() -> int:
    raw = os.environ.get("COORD_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"COORD_THREADS must be an integer, got {raw!r}") from None


def parallel_map(fn, items):
    items = list(items)
    n = min(threads(), len(items)) or 1
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def parse_range(text: str) -> list[int]:
    """``4``, ``4..10`` or ``4,6,8``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"bad integer range {text!r}; use N, A..B or A,B,C") from None


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return [float(f"{start + k * step:.12g}") for k in range(count)]
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"bad grid {text!r}; use START:STOP:STEP or a comma list") from None


class Formatter:
    def __init__(self, digits: int):
        self.digits = digits

    def __call__(self, x) -> str:
        if isinstance(x, (bool, np.bool_)):
            return "true" if x else "false"
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        if isinstance(x, (float, np.floating)):
            return f"{float(x):.{self.digits}g}"
        return str(x)

    def num(self, x: float) -> float:
        return float(f"{x:.{self.digits}g}")

    def csv(self, header, rows) -> str:
        lines = [",".join(header)]
        lines += [",".join(self(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"


def emit(text: str, out) -> None:
    if not out:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".coordcert-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_file(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_dag(args, fmt: Formatter) -> str:
    (n,) = _single(args.n)
    g = dagmod.build_gstar_q(n) if args.quantum else dagmod.build_gstar(n)
    return g.to_json() if args.format == "json" else g.to_text()


def cmd_inflate(args, fmt: Formatter) -> str:
    (n,) = _single(args.n)
    spec = inflation.build_ghz_inflation(n) if args.kind == "ghz" else inflation.build_cut_inflation(n)
    if args.format == "csv":
        return spec.to_csv()
    st = inflation.derive_structure(spec)
    pairs = lambda s: sorted([str(a), str(b)] for a, b in s)
    payload = {
        "n": n,
        "kind": args.kind,
        "copies_needed": {inflation.source_name(k): v for k, v in inflation.copies_needed(spec).items()},
        "injectable_pairs": pairs(st.injectable_pairs),
        "independent_pairs": pairs(st.independent_pairs),
        "commuting_pairs": pairs(st.commuting_pairs),
    }
    return json.dumps(payload, indent=2) + "\n"


def cmd_witness(args, fmt: Formatter) -> str:
    ns = parse_range(args.n)
    variant = witness.Variant.parse(args.variant)
    if args.format == "csv" and len(ns) == 1:
        return witness.build_witness(ns[0], variant).to_csv(fmt.digits)

    def row(n):
        w = witness.build_witness(n, variant)
        min_eig, res = witness.psd_check(w)
        return n, min_eig, res, float(np.linalg.eigvalsh(w.entries)[-1])

    rows = parallel_map(row, ns)
    for n, min_eig, res, _ in rows:
        if min_eig < -1e-9:
            raise InvariantError(f"{variant.value} witness for n={n} has eigenvalue {min_eig:.3g}")
    if args.format == "json":
        payload = [
            {"n": n, "variant": variant.value, "min_eig": fmt.num(e), "null_residual": fmt.num(r), "max_eig": fmt.num(d)}
            for n, e, r, d in rows
        ]
        return json.dumps(payload, indent=2) + "\n"
    return fmt.csv(["n", "variant", "min_eig", "null_residual", "max_eig"], [(n, variant.value, e, r, d) for n, e, r, d in rows])


def cmd_certify(args, fmt: Formatter) -> str:
    text = read_file(args.dist)
    if args.dist.endswith(".json"):
        try:
            dist = inequalities.Distribution.from_json(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.dist}: invalid JSON ({exc})") from None
    else:
        dist = inequalities.Distribution.from_csv(text)
    n = dist.n if args.n is None else args.n
    if n != dist.n:
        raise ValidationError(f"--n {n} does not match the {dist.n}-party distribution")
    if n < 3:
        raise ValidationError(f"need at least 3 parties, got {n}")
    variant = witness.Variant.parse(args.variant)
    bundle = inequalities.correlators(dist)
    slack = inequalities.coordination_slack(bundle, n, variant)
    gamma = inequalities.moment_matrix(bundle, n)
    trace = witness.certificate(gamma, witness.build_witness(n, variant))
    payload = {
        "n": n,
        "variant": variant.value,
        "adjacent_correlators": [fmt.num(bundle.pair(i, j)) for i, j in inequalities.adjacent_pairs(n)],
        "end_product": fmt.num(bundle.single(1) * bundle.single(n)),
        "slack": fmt.num(slack),
        "trace": fmt.num(trace),
        "verdict": "common cause certified" if slack < 0 else "inconclusive",
    }
    return json.dumps(payload, indent=2) + "\n"


def cmd_noise_table(args, fmt: Formatter) -> str:
    ns = parse_range(args.n)
    variant = witness.Variant.parse(args.variant)
    if args.curve:
        grid = parse_grid(args.v)
        rows = noise.violation_curve(ns, grid, variant)
        return fmt.csv(["n", "v", "value", "in_region"], rows)
    results = parallel_map(lambda n: noise.solve_threshold(n, variant), ns)
    if args.format == "json":
        return noise.threshold_table_json(results, fmt.digits)
    return fmt.csv(
        ["n", "variant", "v_min", "f_min", "restriction_bound"],
        [(r.n, r.variant.value, r.v_min, r.f_min, r.restriction_bound) for r in results],
    )


def cmd_ghz_scan(args, fmt: Formatter) -> str:
    ns = parse_range(args.n)
    grid = parse_grid(args.v)
    variant = witness.Variant.parse(args.variant)
    jobs = [(n, v) for n in ns for v in grid]

    def row(job):
        n, v = job
        st = quantum.optimal_strategy_stats(n, v)
        try:
            slack = inequalities.ghz_slack(st, n, variant)
        except OutOfRegionError:
            slack = float("nan")
        return (n, v, st.i_chsh_plus, st.i_chsh_minus, st.i_same, st.a_rest_mean, slack)

    rows = parallel_map(row, jobs)
    for n in ns:
        pts = [(r[1], r[6]) for r in rows if r[0] == n and not np.isnan(r[6])]
        for (v0, s0), (v1, s1) in zip(pts, pts[1:]):
            if s0 >= 0 > s1:
                print(f"n={n}: slack changes sign between v={fmt(v0)} and v={fmt(v1)}", file=sys.stderr)
    out = [tuple("out-of-region" if isinstance(x, float) and np.isnan(x) else x for x in r) for r in rows]
    return fmt.csv(["n", "v", "i_chsh_plus", "i_chsh_minus", "i_same", "a_rest_mean", "slack"], out)


def cmd_opt_check(args, fmt: Formatter) -> str:
    if args.circuit:
        c = opt.Circuit.from_text(read_file(args.circuit))
        issues = opt.validate_circuit(c)
        if issues:
            raise ValidationError("; ".join(map(str, issues)))
        cls = opt.classify(c)
        dist = opt.assign_probability(c, cls)
        nsi = opt.check_nsi(c)
        props = opt.check_propositions(c)
        payload = {
            "embeddable_sets": [list(s) for s in cls.embeddable_sets],
            "non_embeddable": list(cls.non_embeddable),
            "observations": list(dist.observations),
            "probs": {k: fmt.num(v) for k, v in dist.support().items()},
            "nsi_failures": nsi.failures,
            "proposition_failures": props.failures,
        }
        if not (nsi.ok and props.ok):
            sys.stdout.write(json.dumps(payload, indent=2) + "\n")
            raise InvariantError("rule checks failed on the given circuit")
        return json.dumps(payload, indent=2) + "\n"
    report = opt.check_corpus(args.bound)
    text = report.summary() + "\n"
    for f in (report.nsi.failures + report.propositions.failures)[:20]:
        text += f"  {f}\n"
    if not report.ok:
        sys.stdout.write(text)
        raise InvariantError("rule checks failed on the enumerated corpus")
    return text


def cmd_lemma2_probe(args, fmt: Formatter) -> str:
    rng = np.random.default_rng(args.seed)
    r = quantum.lemma2_probe(args.dim, args.trials, rng, violation=args.violation)
    payload = {
        "dim": r.dim,
        "trials": r.trials,
        "violation": args.violation,
        "max_residual": fmt.num(r.max_residual),
        "max_premise_gap": fmt.num(r.max_premise_gap),
    }
    return json.dumps(payload, indent=2) + "\n"


def _single(text: str) -> list[int]:
    ns = parse_range(text)
    if len(ns) != 1:
        raise ValidationError(f"expected a single n, got {text!r}")
    return ns


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coordcert", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--out", help="write to this file (atomically) instead of stdout")
        sp.add_argument("--digits", type=int, default=12, help="significant digits for numbers")
        sp.set_defaults(func=func)
        return sp

    sp = add("gen-dag", cmd_gen_dag, "emit the no-common-cause DAG for n parties")
    sp.add_argument("--n", required=True)
    sp.add_argument("--quantum", action="store_true", help="quantum parties plus a classical broadcast source")
    sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = add("inflate", cmd_inflate, "emit an inflation copy-index table")
    sp.add_argument("--n", required=True)
    sp.add_argument("--kind", choices=("cut", "ghz"), default="cut")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = add("witness", cmd_witness, "emit a witness matrix or its PSD report")
    sp.add_argument("--n", required=True, help="N or A..B")
    sp.add_argument("--variant", default="trig", choices=("trig", "alt"))
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = add("certify", cmd_certify, "evaluate the coordination inequality on a distribution")
    sp.add_argument("--dist", required=True, help="CSV (outcome_bits,probability) or .json")
    sp.add_argument("--n", type=int)
    sp.add_argument("--variant", default="trig", choices=("trig", "alt"))

    sp = add("noise-table", cmd_noise_table, "visibility and fidelity thresholds")
    sp.add_argument("--n", default="4..10")
    sp.add_argument("--variant", default="trig", choices=("trig", "alt"))
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--curve", action="store_true", help="emit the violation curve instead of the table")
    sp.add_argument("--v", default="0.93:1.0:0.001", help="visibility grid for --curve")

    sp = add("ghz-scan", cmd_ghz_scan, "simulate the GHZ strategy over a visibility grid")
    sp.add_argument("--n", required=True)
    sp.add_argument("--v", required=True, help="START:STOP:STEP or comma list")
    sp.add_argument("--variant", default="trig", choices=("trig", "alt"))

    sp = add("opt-check", cmd_opt_check, "exhaustive rule checks on the counterexample theory")
    sp.add_argument("--bound", type=int, default=5, help="maximum number of preparations")
    sp.add_argument("--circuit", help="check a single circuit file instead")

    sp = add("lemma2-probe", cmd_lemma2_probe, "random test of the projector lemma")
    sp.add_argument("--dim", type=int, default=16)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--violation", type=float, default=0.0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = Formatter(args.digits)
    try:
        emit(args.func(args, fmt), args.out)
    except InvariantError as exc:
        print(f"error: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (CoordError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
