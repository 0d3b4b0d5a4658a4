"""Command-line experiments.

Machine-readable artifacts (CSV series, JSON verdicts) go to ``--out``
together with ``manifest.json``; stdout carries a short human summary.

Exit codes: 0 success, 2 invariant violated, 3 capped or inconclusive
result under ``--strict``, 64 usage error, 74 I/O error.
"""
import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import arw as arw_mod
from . import config as cfg_mod
from . import fields, metastability, prober, recurrence, toppling
from .lattice import Volume

EXIT_OK = 0
EXIT_ASSERT = 2
EXIT_STRICT = 3
EXIT_USAGE = 64
EXIT_IO = 74

SEED_ENV = "SANDSTAB_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


class Output:
    """Collects artifacts under ``out_dir`` (or nowhere) and their hashes."""

    def __init__(self, out_dir):
        self.dir = out_dir
        self.hashes = {}
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

    def _write(self, name, text):
        data = text.encode()
        self.hashes[name] = _sha256(data)
        if self.dir:
            with open(os.path.join(self.dir, name), "wb") as fh:
                fh.write(data)

    def json(self, name, obj):
        self._write(name, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def csv(self, name, rows, fieldnames=None):
        if fieldnames is None:
            fieldnames = list(rows[0]) if rows else []
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k)) for k in fieldnames})
        self._write(name, buf.getvalue())

    def binary(self, name, data):
        self.hashes[name] = _sha256(data)
        if self.dir:
            with open(os.path.join(self.dir, name), "wb") as fh:
                fh.write(data)


def _cell(v):
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return str(obj)


class Run:
    """What a subcommand reports back for the manifest and exit code."""

    def __init__(self):
        self.sampler = None
        self.policy = None
        self.seeds = None
        self.volumes = None
        self.inputs = {}
        self.topplings = 0
        self.soft_fail = False

    def load(self, path):
        try:
            with open(path, "rb") as fh:
                self.inputs[path] = _sha256(fh.read())
            return cfg_mod.load(path)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot parse configuration {path}: {exc}") from exc


# ---------------------------------------------------------------- parsing


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _seeds(text):
    """``0:20`` (range), ``1,5,9`` (list) or a single integer."""
    text = str(text)
    try:
        if ":" in text:
            a, b = text.split(":")
            return list(range(int(a), int(b)))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from exc


def _site(text):
    return tuple(_int_list(text))


def _sampler(args, default=None):
    text = getattr(args, "sampler", None) or default
    if text is None:
        raise UsageError("--sampler is required")
    try:
        return fields.SamplerSpec.parse(text, seed=args.seed)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad sampler {text!r}: {exc}") from exc


def _config_from(args, run, default_L=None):
    """Configuration from ``--input`` or drawn from ``--sampler`` on ``--L`` / ``--d``."""
    if getattr(args, "input", None):
        return run.load(args.input)
    spec = _sampler(args)
    L = args.L[-1] if isinstance(args.L, list) else (args.L or default_L)
    if L is None:
        raise UsageError("give --input or --sampler with --L")
    V = Volume.box(int(L), args.d)
    run.sampler = spec
    run.volumes = [V.to_json()]
    return fields.sample(spec, V)


def _policy(args):
    return prober.Policy(min_growth=args.min_growth, n_seeds=args.n_seeds, cap=args.cap)


# ---------------------------------------------------------------- commands


def cmd_probe(args, out, run):
    spec = _sampler(args)
    Ls = args.L or prober.default_schedule(args.d)
    V_list = prober.centered_volumes(Ls, args.d)
    policy = _policy(args)
    seeds = args.seeds or [args.seed]
    run.sampler, run.policy, run.seeds, run.volumes = spec, policy, seeds, [V.to_json() for V in V_list]
    rows, verdicts = [], []
    for s in seeds:
        series = prober.nested_probe(spec.with_seed(s), V_list, site=args.site, cap=policy.cap)
        v = prober.classify(series, policy)
        rows += [dict(seed=s, **r) for r in series.rows()]
        verdicts.append({"seed": s, "m0": series.m0, "verdict": v.to_json()})
        run.topplings += sum(series.m0)
        print(f"seed {s}: m0 = {series.m0} -> {v.cls}")
    out.csv("series.csv", rows, ["seed", "L", "sites", "m0", "capped"])
    out.json("verdict.json", {"sampler": spec.to_json(), "policy": policy.to_json(), "L": Ls, "runs": verdicts})
    run.soft_fail = any(v["verdict"]["class"] == prober.INCONCLUSIVE for v in verdicts)


def cmd_bracket(args, out, run):
    Ls = args.L or prober.default_schedule(args.d)
    V_list = prober.centered_volumes(Ls, args.d)
    policy = _policy(args)
    seeds = args.seeds or list(range(policy.n_seeds))
    run.policy, run.seeds, run.volumes = policy, seeds, [V.to_json() for V in V_list]
    try:
        b = prober.critical_bracket(args.family, args.lo, args.hi, args.tol, V_list, seeds, policy)
    except ValueError as exc:
        print(f"bracket failed: {exc}")
        out.json("bracket.json", {"error": str(exc), "family": args.family, "lo": args.lo, "hi": args.hi})
        run.soft_fail = True
        return
    out.json("bracket.json", dict(b.to_json(), L=Ls, seeds=seeds))
    out.csv("points.csv", [{"rho": p["rho"], "verdict": p["verdict"]} for p in b.points], ["rho", "verdict"])
    print(f"{args.family}: critical mean in [{b.lo:.6g}, {b.hi:.6g}] (converged={b.converged})")
    run.soft_fail = not b.converged


def cmd_burn_test(args, out, run):
    eta = run.load(args.input)
    if not eta.is_stable():
        raise UsageError("burn-test needs a stable configuration")
    w = recurrence.find_forbidden(eta)
    res = {"recurrent": w is None, "volume": eta.volume.to_json()}
    if w is not None:
        res["witness"] = [list(s) for s in w.sites(eta.volume)]
    out.json("burn.json", res)
    print("recurrent" if w is None else f"not recurrent: forbidden set of {len(res['witness'])} sites")


def cmd_representative(args, out, run):
    eta = run.load(args.input)
    xi = recurrence.recurrent_representative(eta)
    cert = recurrence.equivalence_check(eta, xi)
    if cert is None:
        raise AssertionError("representative is not equivalent to the input")
    out.json("representative.json", {"config": xi.to_json(), "certificate_m": cert.m.tolist()})
    print(f"representative found; total height {xi.total()}")


def cmd_umrc_sample(args, out, run):
    V = Volume.box(args.L, args.d)
    run.volumes, run.seeds = [V.to_json()], [args.seed]
    run.sampler = fields.SamplerSpec("umrc", {"burn_in": args.burn_in, "stride": args.stride}, args.seed)
    rows = []
    last = None
    for i, eta in enumerate(recurrence.umrc_chain(V, args.burn_in, args.stride, args.seed, args.n)):
        if not recurrence.is_recurrent(eta):
            raise AssertionError(f"sample {i} is not recurrent")
        rows.append({"sample": i, "mean_height": float(eta.heights.mean())})
        if args.save_all:
            out.binary(f"sample_{i:05d}.asm", eta.to_bytes())
        last = eta
    out.csv("samples.csv", rows, ["sample", "mean_height"])
    out.json("last_sample.json", last.to_json())
    print(f"{len(rows)} samples, mean height {np.mean([r['mean_height'] for r in rows]):.4f}")


def cmd_density(args, out, run):
    spec = _sampler(args)
    V = Volume.box(args.L, args.d)
    run.sampler, run.volumes, run.seeds = spec, [V.to_json()], [args.seed]
    est = recurrence.density_estimate(spec, V, n_samples=args.n, halo=args.halo)
    out.csv("density.csv", [{"sample": i, "mean": m} for i, m in enumerate(est.sample_means)], ["sample", "mean"])
    declared = fields.declared_mean(spec)
    out.json(
        "density.json",
        {"sampler": spec.to_json(), "mean": est.mean, "stderr": est.stderr, "n_samples": est.n_samples,
         "declared_mean": declared, "halo": args.halo},
    )
    print(f"density {est.mean:.5f} +- {est.stderr:.5f} over {est.n_samples} samples")


def cmd_green_check(args, out, run):
    eta = _config_from(args, run)
    g = prober.green_identity_check(eta, site=args.site)
    out.json("green.json", g.to_json())
    print(f"m({','.join(map(str, g.site))}) = {g.m0}; residual {g.residual} ({g.mode}); integer form {g.integer_form}")
    if not g.integer_form or (g.residual is not None and g.residual != 0):
        raise AssertionError("Green identity violated")


def cmd_arw(args, out, run):
    eta = _config_from(args, run)
    if args.t_max is None and not args.until_quiescent:
        raise UsageError("give --until-quiescent or --t-max")
    st = arw_mod.arw_run(eta, t_max=args.t_max, until_quiescent=args.t_max is None, seed=args.seed)
    run.topplings += int(st.n.sum())
    res = {"t": st.t, "events": st.events, "quiescent": st.quiescent, "total_topplings": int(st.n.sum()),
           "final": st.config.to_json()}
    if st.quiescent:
        ref = toppling.stabilize(eta)
        same = st.config == ref.xi and np.array_equal(st.n, ref.m)
        res["matches_stabilize"] = bool(same)
        if not same:
            raise AssertionError("ARW final state differs from stabilize")
    out.json("arw.json", res)
    if args.trace_out:
        grid = args.trace_times or list(np.linspace(0, max(st.t, 1.0), 21))
        rows = arw_mod.arw_trace(eta, grid, seed=args.seed)
        out.csv(args.trace_out, rows, ["t", "unstable", "total_topplings"])
    print(f"t = {st.t:.4f}, {st.events} events, quiescent={st.quiescent}")
    run.soft_fail = not st.quiescent


def cmd_waves(args, out, run):
    eta = _config_from(args, run)
    site = args.site or (0,) * eta.d
    wd = toppling.wave_decompose(eta, site, max_waves=args.max_waves)
    rows = []
    for w in range(wd.count):
        mask = wd.support_mask(w)
        rows.append({"wave": w, "size": int(mask.sum()),
                     "simply_connected": toppling.is_simply_connected(mask) if eta.d == 2 else ""})
    run.topplings += int(wd.m.sum())
    out.csv("waves.csv", rows, ["wave", "size", "simply_connected"])
    out.json("waves.json", {"site": list(site), "waves": wd.count, "capped": wd.capped, "sizes": [r["size"] for r in rows]})
    print(f"{wd.count} waves (capped={wd.capped})")
    run.soft_fail = wd.capped


def cmd_lakes(args, out, run):
    if args.build is not None:
        V = Volume.box(args.L or 4 * args.build + 1, 2)
        eta = fields.build_nested_lakes(args.build, V)
        out.json("config.json", eta.to_json())
    else:
        eta = _config_from(args, run)
    lakes = metastability.detect_nested_lakes(eta, origin=args.site or (0, 0))
    out.json("lakes.json", lakes.to_json())
    print(f"{lakes.count} nested lakes at radii {list(lakes.radii)}")


def cmd_meta_probe(args, out, run):
    if args.build is not None:
        eta = fields.build_nested_lakes(args.build, Volume.box(args.L or 4 * args.build + 1, 2))
    else:
        eta = _config_from(args, run)
    rep = metastability.metastability_probe(eta, origin=args.site or (0, 0), max_waves=args.max_waves)
    run.topplings += rep.total_topplings
    out.json("meta.json", rep.to_json())
    print(f"{rep.wave_count} waves, {rep.nested_lakes} nested lakes, blow_up={rep.blow_up}")
    run.soft_fail = rep.blow_up


def cmd_meta_sweep(args, out, run):
    seeds = args.seeds or [args.seed]
    run.seeds = seeds
    rows, summary = metastability.sea_islands_sweep(args.p, args.L, seeds, max_waves=args.max_waves)
    run.topplings += sum(r["topplings"] for r in rows)
    out.csv("sweep.csv", rows, ["p", "L", "seed", "origin_height", "waves", "lakes", "blow_up", "topplings"])
    out.csv("summary.csv", summary, ["p", "L", "mean_waves", "max_waves", "blow_up_rate"])
    for s in summary:
        print(f"p={s['p']:.3g} L={s['L']}: mean waves {s['mean_waves']:.2f}, blow-up rate {s['blow_up_rate']:.2f}")


def cmd_d1_check(args, out, run):
    spec = _sampler(args)
    policy = _policy(args)
    seeds = args.seeds or [args.seed]
    Ls = args.L or prober.default_schedule(1)
    run.sampler, run.policy, run.seeds = spec, policy, seeds
    rep = prober.d1_exact_check(spec, Ls, seeds, policy)
    out.json("d1.json", rep)
    out.csv("d1.csv", [{"seed": r["seed"], "verdict": r["verdict"], "contradiction": r["contradiction"]}
                       for r in rep["runs"]], ["seed", "verdict", "contradiction"])
    flag = " (boundary case)" if rep["boundary"] else ""
    print(f"mean {rep['mean']}{flag}: verdicts {rep['verdicts']}, contradictions {rep['contradictions']}")
    run.soft_fail = rep["contradictions"] > 0 or prober.INCONCLUSIVE in rep["verdicts"]


def cmd_counterexample_6bar(args, out, run):
    Ls = args.L or [8, 16, 32, 64]
    rep = prober.counterexample_6bar(prober.centered_volumes(Ls, 2), args.identity_L, _policy(args))
    out.json("six_bar.json", rep)
    print(f"identity residual {rep['identity_residual']}; constant 6: {rep['six']['verdict']} {rep['six']['m0']}; "
          f"constant 2 all zero: {rep['two']['all_zero']}")
    if rep["identity_residual"] != 0 or not rep["two"]["all_zero"]:
        raise AssertionError("6 = 2 - Delta f identity or constant-2 check failed")
    run.soft_fail = rep["six"]["verdict"] != prober.DIVERGING


def cmd_line_field_bound(args, out, run):
    Ls = args.L or [25, 51, 75, 101]
    V_list = prober.centered_volumes(Ls, 2)
    seeds = args.seeds or [args.seed]
    policy = _policy(args)
    run.seeds, run.policy = seeds, policy
    rows, verdicts = [], []
    for s in seeds:
        series, bounds = prober.line_field_probe(args.p, V_list, s)
        for L, (m0, count) in zip(Ls, bounds):
            rows.append({"seed": s, "L": L, "m0": m0, "rectangles": count})
        cls = prober.classify(series, policy).cls if len(Ls) >= 4 else None
        verdicts.append({"seed": s, "m0": series.m0, "verdict": cls})
        run.topplings += sum(series.m0)
    out.csv("bound.csv", rows, ["seed", "L", "m0", "rectangles"])
    out.json("line_field.json", {"p": args.p, "L": Ls, "runs": verdicts})
    print(f"bound held in {len(rows)} cases; verdicts {[v['verdict'] for v in verdicts]}")
    run.soft_fail = any(v["verdict"] != prober.DIVERGING for v in verdicts)


# ---------------------------------------------------------------- parser


def _common(p):
    p.add_argument("--out", help="directory for CSV/JSON artifacts and manifest.json")
    p.add_argument("--seed", type=int, default=None, help=f"seed (default ${SEED_ENV} or 0)")
    p.add_argument("--strict", action="store_true", help="exit 3 on capped or inconclusive results")
    p.add_argument("--config", help="JSON file with default values for these flags")


def _field_args(p, L_list=False, with_input=True):
    p.add_argument("--sampler", help="sampler JSON or shorthand, e.g. constant:6, iid:1=0.5,3=0.5, poisson:3.5")
    p.add_argument("--d", type=int, default=2)
    if L_list:
        p.add_argument("--L", type=_int_list, default=None, help="comma-separated side lengths")
    else:
        p.add_argument("--L", type=int, default=None)
    if with_input:
        p.add_argument("--input", help="configuration file (.json or ASM1 binary)")


def _policy_args(p):
    p.add_argument("--min-growth", type=int, default=1)
    p.add_argument("--n-seeds", type=int, default=5)
    p.add_argument("--cap", type=int, default=toppling.DEFAULT_CAP)


COMMANDS = {}


def build_parser():
    parser = _Parser(prog="sandstab", description="Sandpile stabilizability experiments.")
    parser.add_argument("--version", action="version", version=f"sandstab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        COMMANDS[name] = func
        return p

    p = add("probe", cmd_probe, "toppling count at a site over nested boxes, with a verdict")
    _field_args(p, L_list=True, with_input=False)
    p.add_argument("--site", type=_site, default=None)
    p.add_argument("--seeds", type=_seeds, default=None)
    _policy_args(p)

    p = add("bracket", cmd_bracket, "bisect the critical mean of a field family")
    p.add_argument("--family", default="two-point:1,3", help="two-point:a,b or poisson")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--tol", type=float, default=0.1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--L", type=_int_list, default=None)
    p.add_argument("--seeds", type=_seeds, default=None)
    _policy_args(p)

    p = add("burn-test", cmd_burn_test, "recurrence test with a forbidden-set witness")
    p.add_argument("--input", required=True)

    p = add("representative", cmd_representative, "recurrent configuration equivalent to the input")
    p.add_argument("--input", required=True)

    p = add("umrc-sample", cmd_umrc_sample, "samples of the uniform recurrent measure")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--save-all", action="store_true", help="write every sample as ASM1 binary")

    p = add("density", cmd_density, "mean height of a field over a central region")
    _field_args(p, with_input=False)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--halo", type=int, default=0)

    p = add("green-check", cmd_green_check, "exact Green-function identity for the toppling count")
    _field_args(p)
    p.add_argument("--site", type=_site, default=None)

    p = add("arw", cmd_arw, "activated random walkers run")
    _field_args(p)
    p.add_argument("--until-quiescent", action="store_true")
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--trace-out", help="CSV name (inside --out) for t, unstable, total_topplings")
    p.add_argument("--trace-times", type=_float_list, default=None)

    p = add("waves", cmd_waves, "wave decomposition after one added grain")
    _field_args(p)
    p.add_argument("--site", type=_site, default=None)
    p.add_argument("--max-waves", type=int, default=toppling.DEFAULT_MAX_WAVES)

    p = add("lakes", cmd_lakes, "nested lakes around the origin")
    _field_args(p)
    p.add_argument("--build", type=int, default=None, help="construct n nested lakes instead of reading")
    p.add_argument("--site", type=_site, default=None)

    p = add("meta-probe", cmd_meta_probe, "waves, lakes and blow-up after one grain at the origin")
    _field_args(p)
    p.add_argument("--build", type=int, default=None)
    p.add_argument("--site", type=_site, default=None)
    p.add_argument("--max-waves", type=int, default=toppling.DEFAULT_MAX_WAVES)

    p = add("meta-sweep", cmd_meta_sweep, "sea-with-islands sweep over p, size and seed")
    p.add_argument("--p", type=_float_list, required=True)
    p.add_argument("--L", type=_int_list, required=True)
    p.add_argument("--seeds", type=_seeds, default=None)
    p.add_argument("--max-waves", type=int, default=10_000)

    p = add("d1-check", cmd_d1_check, "d = 1 verdicts against the density-2 threshold")
    p.add_argument("--sampler", required=True)
    p.add_argument("--L", type=_int_list, default=None)
    p.add_argument("--seeds", type=_seeds, default=None)
    _policy_args(p)

    p = add("counterexample-6bar", cmd_counterexample_6bar, "constant 6 as 2 - Delta f, and its divergence")
    p.add_argument("--L", type=_int_list, default=None)
    p.add_argument("--identity-L", type=int, default=50)
    _policy_args(p)

    p = add("line-field-bound", cmd_line_field_bound, "rectangle lower bound for line field plus UMRC")
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--L", type=_int_list, default=None)
    p.add_argument("--seeds", type=_seeds, default=None)
    _policy_args(p)
    return parser


def _apply_config(parser, args, argv):
    """Fill flags the user did not give from the ``--config`` JSON file."""
    with open(args.config) as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        raise UsageError("--config must hold a JSON object")
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, val in values.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise UsageError(f"unknown key {key!r} in --config")
        if dest not in given:
            setattr(args, dest, val)
    # re-run list-valued flags through their parsers when given as strings
    for dest, conv in (("L", _int_list), ("seeds", _seeds), ("site", _site), ("p", _float_list)):
        val = getattr(args, dest, None)
        if isinstance(val, str) or (isinstance(val, int) and dest in ("seeds",)):
            setattr(args, dest, conv(str(val)))


def _default_seed():
    text = os.environ.get(SEED_ENV)
    if text is None:
        return 0
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"${SEED_ENV} must be an integer") from exc


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    run = Run()
    try:
        if args.config:
            _apply_config(parser, args, argv)
        if args.seed is None:
            args.seed = _default_seed()
        out = Output(args.out)
        COMMANDS[args.command](args, out, run)
    except UsageError as exc:
        print(f"sandstab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"sandstab {args.command}: invariant violated: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except OSError as exc:
        print(f"sandstab {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"sandstab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        manifest = {
            "tool": "sandstab",
            "version": __version__,
            "command": ["sandstab"] + argv,
            "subcommand": args.command,
            "args": {k: v for k, v in sorted(vars(args).items()) if k not in ("out",)},
            "sampler": run.sampler.to_json() if run.sampler else None,
            "policy": run.policy.to_json() if run.policy else None,
            "seeds": run.seeds,
            "volumes": run.volumes,
            "input_hashes": run.inputs,
            "artifacts": out.hashes,
            "wall_clock_s": round(time.perf_counter() - t0, 3),
            "topplings": run.topplings,
        }
        try:
            with open(os.path.join(args.out, "manifest.json"), "w") as fh:
                json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
                fh.write("\n")
        except OSError as exc:
            print(f"sandstab: I/O error writing manifest: {exc}", file=sys.stderr)
            return EXIT_IO
    if args.strict and run.soft_fail:
        return EXIT_STRICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
