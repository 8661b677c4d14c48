"""Command line entry point.

Settings come from, in increasing priority: built-in defaults, a flat
``key=value`` config file (``--config``), ``LEVELKNET_<KEY>`` environment
variables, and command-line flags. Exit codes: 0 ok, 1 verification failure,
2 usage or precondition error (with a JSON error object on stderr).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

ENV_PREFIX = "LEVELKNET_"
STOCHASTIC = {"sample", "locallimit", "stats", "census", "constants"}

# defaults per option; None means "required when the subcommand needs it"
DEFAULTS = {
    "k": 1,
    "n": None,
    "max_n": 10,
    "seed": None,
    "count": 1,
    "order": 64,
    "out": None,
    "format": None,
    "jobs": os.cpu_count() or 1,
    "method": "cycle",
    "mode": "vertex",
    "depth": 1,
    "which": "vertices",
    "mc_budget": 2000,
    "heights_out": None,
    "cache_dir": None,
    "max_rejections": None,
}
INT_KEYS = {"k", "n", "max_n", "seed", "count", "order", "jobs", "depth", "mc_budget",
            "max_rejections"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levelknet", description="Level-k network enumeration and sampling.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text, *opts):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="flat key=value file; flags override it")
        for opt in opts:
            kind = int if opt in INT_KEYS else str
            sp.add_argument("--" + opt.replace("_", "-"), dest=opt, type=kind, default=None)
        return sp

    add("generators", "list generators (json) or their signature table (csv)",
        "k", "format", "out")
    add("counts", "exact network counts n! [z^n] N as CSV", "k", "max_n", "out")
    add("constants", "offspring law and derived constants", "k", "seed", "mc_budget",
        "format", "out")
    add("sample", "uniform random networks as JSON lines (or dot)", "k", "n", "seed",
        "count", "method", "max_rejections", "format", "out", "jobs")
    add("locallimit", "balls of the root or vertex local limit", "k", "mode", "depth",
        "seed", "count", "out")
    add("stats", "heights and longest paths of sampled networks (CSV)", "k", "n", "seed",
        "count", "out", "heights_out", "jobs")
    add("census", "neighbourhood census of sampled networks (JSON)", "k", "n", "seed",
        "count", "depth", "which", "out", "jobs")
    add("bruteforce", "exhaustive enumeration of a small universe", "k", "n", "out",
        "cache_dir")
    v = add("verify", "run the acceptance suite", "seed", "jobs", "cache_dir")
    v.add_argument("--quick", action="store_true", help="only the fast criteria")
    v.add_argument("--criteria", default=None, help="comma separated criterion numbers")
    return p


def read_config(path: str) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, environment and flags."""
    cfg = {k: v for k, v in DEFAULTS.items()}
    layers = []
    if getattr(args, "config", None):
        layers.append(read_config(args.config))
    layers.append({key[len(ENV_PREFIX):].lower(): val for key, val in os.environ.items()
                   if key.startswith(ENV_PREFIX) and key != ENV_PREFIX + "CACHE"})
    for layer in layers:
        for key, val in layer.items():
            if key in cfg:
                cfg[key] = val
    for key, val in vars(args).items():
        if val is not None and key in cfg:
            cfg[key] = val
    for key in INT_KEYS:
        if cfg[key] is not None:
            try:
                cfg[key] = int(cfg[key])
            except ValueError:
                raise UsageError(f"{key} must be an integer, got {cfg[key]!r}") from None
    cfg["command"] = args.command
    if args.command in STOCHASTIC and cfg["seed"] is None:
        raise UsageError(f"'{args.command}' needs --seed")
    if cfg["k"] < 1 or cfg["k"] > 3:
        raise UsageError("k must be 1, 2 or 3")
    return cfg


HEADER_KEYS = {
    "constants": ("k", "seed", "mc_budget"),
    "sample": ("k", "n", "seed", "count", "method"),
    "locallimit": ("k", "mode", "depth", "seed", "count"),
    "stats": ("k", "n", "seed", "count"),
    "census": ("k", "n", "seed", "count", "depth", "which"),
}


def _header(cfg: dict) -> dict:
    keys = HEADER_KEYS.get(cfg["command"], ("k",))
    return {"command": cfg["command"], **{key: cfg[key] for key in keys}}


def _emit(text: str, cfg: dict) -> None:
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands ------------------------------------------------------------------

def cmd_generators(cfg):
    from .generators import generators_to_json
    from .pipeline import level
    lev = level(cfg["k"])
    if (cfg["format"] or "json") == "csv":
        return _emit(lev.table.to_csv(), cfg)
    return _emit(generators_to_json(lev.generators) + "\n", cfg)


def cmd_counts(cfg):
    from .offspring import exact_count
    from .pipeline import level
    max_n = cfg["max_n"]
    if max_n < 1:
        raise ValueError("max-n must be positive")
    series = level(cfg["k"]).network_series(max(max_n, 2))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "n", "count"])
    for n in range(1, max_n + 1):
        w.writerow([cfg["k"], n, exact_count(series, n)])
    _emit(buf.getvalue(), cfg)


def cmd_constants(cfg):
    from .constants import constants_json, derive_constants
    from .pipeline import level
    lev = level(cfg["k"])
    consts = derive_constants(lev.heads, lev.model, cfg["mc_budget"],
                              np.random.default_rng(cfg["seed"]))
    data = constants_json(consts)
    if (cfg["format"] or "table") == "json":
        return _emit(json.dumps({"config": _header(cfg), "constants": data}, indent=1) + "\n",
                     cfg)
    lines = [f"# {json.dumps(_header(cfg), sort_keys=True)}"]
    for key, rec in data.items():
        err_key = "stderr" if "stderr" in rec else "abs_error"
        lines.append(f"{key:24s} {rec['value']:<24.16g} {err_key}={rec[err_key]:.3g}  "
                     f"{rec['method']}")
    _emit("\n".join(lines) + "\n", cfg)


def _sample_one(args):
    from .network import serialize, to_dot
    from .pipeline import level
    from .sampler import sample_network
    k, n, seed, method, max_rej, fmt, index = args
    lev = level(k)
    s = sample_network(lev.heads, lev.model, n, np.random.default_rng(seed), method, max_rej)
    if fmt == "dot":
        return to_dot(s.network, name=f"N{index}")
    return serialize(s.network)


def cmd_sample(cfg):
    from .parallel import child_seeds, pmap
    if cfg["n"] is None or cfg["n"] < 1:
        raise ValueError("sample needs --n >= 1")
    fmt = cfg["format"] or "jsonl"
    if fmt not in ("jsonl", "dot"):
        raise ValueError("format must be jsonl or dot")
    if cfg["method"] not in ("cycle", "rejection"):
        raise ValueError("method must be cycle or rejection")
    seeds = child_seeds(cfg["seed"], cfg["count"])
    tasks = [(cfg["k"], cfg["n"], s, cfg["method"], cfg["max_rejections"], fmt, i)
             for i, s in enumerate(seeds)]
    items = pmap(_sample_one, tasks, cfg["jobs"])
    header = json.dumps({"config": _header(cfg)}, sort_keys=True)
    if fmt == "dot":
        return _emit(f"// {header}\n" + "".join(items), cfg)
    _emit(header + "\n" + "".join(x + "\n" for x in items), cfg)


def cmd_locallimit(cfg):
    from .parallel import child_seeds
    from .pipeline import level
    from .sampler import VertexLimitSampler, sample_root_limit
    from .stats import ball_code
    if cfg["mode"] not in ("root", "vertex"):
        raise ValueError("mode must be root or vertex")
    if cfg["depth"] < 0:
        raise ValueError("depth must be nonnegative")
    lev = level(cfg["k"])
    vs = VertexLimitSampler(lev.heads, lev.model, cfg["k"])
    lines = [json.dumps({"config": _header(cfg)}, sort_keys=True)]
    for seq in child_seeds(cfg["seed"], cfg["count"]):
        rng = np.random.default_rng(seq)
        if cfg["mode"] == "root":
            b = sample_root_limit(lev.heads, lev.model, cfg["depth"], rng)
        else:
            b = vs.sample(cfg["depth"], rng)
        lines.append(json.dumps({"size": b.size, "edges": [list(e) for e in b.edges],
                                 "marked": 0, "code": ball_code(b)}))
    _emit("\n".join(lines) + "\n", cfg)


def _stats_one(args):
    from .pipeline import level
    from .sampler import sample_network
    from .stats import height_process, height_profile, longest_directed_path
    k, n, seed, want_heights = args
    lev = level(k)
    net = sample_network(lev.heads, lev.model, n, np.random.default_rng(seed)).network
    prof = height_profile(net, order=range(net.n_vertices))
    row = [n, net.n_vertices, prof.height, prof.undirected_height, longest_directed_path(net)]
    heights = None
    if want_heights:
        heights = {"all_vertices": height_process(prof, "all-vertices"),
                   "leaves": height_process(prof, "leaves")}
    return row, heights


def cmd_stats(cfg):
    from .parallel import child_seeds, pmap
    if cfg["n"] is None or cfg["n"] < 1:
        raise ValueError("stats needs --n >= 1")
    seeds = child_seeds(cfg["seed"], cfg["count"])
    want = cfg["heights_out"] is not None
    results = pmap(_stats_one, [(cfg["k"], cfg["n"], s, want) for s in seeds], cfg["jobs"])
    buf = io.StringIO()
    buf.write(f"# {json.dumps(_header(cfg), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "n_vertices", "H_dir", "H_undir", "longest_dir_path"])
    for row, _ in results:
        w.writerow(row)
    _emit(buf.getvalue(), cfg)
    if want:
        Path(cfg["heights_out"]).write_text(json.dumps(
            {"config": _header(cfg), "height_processes": [h for _, h in results]}) + "\n")


def _census_one(args):
    from .pipeline import level
    from .sampler import sample_network
    from .stats import neighborhood_census
    k, n, seed, depth, which = args
    lev = level(k)
    net = sample_network(lev.heads, lev.model, n, np.random.default_rng(seed)).network
    return neighborhood_census(net, depth, which).counts


def cmd_census(cfg):
    from collections import Counter
    from .parallel import child_seeds, pmap
    if cfg["n"] is None or cfg["n"] < 1:
        raise ValueError("census needs --n >= 1")
    if cfg["which"] not in ("vertices", "leaves", "root-only"):
        raise ValueError("which must be vertices, leaves or root-only")
    seeds = child_seeds(cfg["seed"], cfg["count"])
    tasks = [(cfg["k"], cfg["n"], s, cfg["depth"], cfg["which"]) for s in seeds]
    total: Counter = Counter()
    for counts in pmap(_census_one, tasks, cfg["jobs"]):
        total.update(counts)
    size = sum(total.values())
    freqs = {json.dumps(code): c / size for code, c in
             sorted(total.items(), key=lambda kv: (-kv[1], json.dumps(kv[0])))}
    _emit(json.dumps({"config": _header(cfg), "total": size, "frequencies": freqs},
                     indent=1) + "\n", cfg)


def cmd_bruteforce(cfg):
    from .bruteforce import enumerate_networks
    if cfg["n"] is None:
        raise ValueError("bruteforce needs --n")
    u = enumerate_networks(cfg["k"], cfg["n"], cache_dir=cfg["cache_dir"])
    if cfg["out"]:
        Path(cfg["out"]).write_text(u.to_jsonl())
    sys.stdout.write(json.dumps({"k": u.k, "n": u.n, "count": len(u)}) + "\n")


def cmd_verify(cfg, args):
    from .verify import CRITERIA, QUICK, VerifyContext, run_suite
    if args.criteria:
        try:
            numbers = [int(x) for x in args.criteria.split(",")]
        except ValueError:
            raise UsageError("--criteria expects comma separated integers") from None
        if any(x not in CRITERIA for x in numbers):
            raise UsageError(f"criteria must lie in {sorted(CRITERIA)}")
    else:
        numbers = list(QUICK) if args.quick else sorted(CRITERIA)
    ctx = VerifyContext(seed=cfg["seed"] if cfg["seed"] is not None else 2024,
                        jobs=cfg["jobs"])
    if cfg["cache_dir"]:
        ctx.cache_dir = Path(cfg["cache_dir"])
    results = run_suite(numbers, ctx, report=lambda s: print(s, flush=True))
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "generators": cmd_generators,
    "counts": cmd_counts,
    "constants": cmd_constants,
    "sample": cmd_sample,
    "locallimit": cmd_locallimit,
    "stats": cmd_stats,
    "census": cmd_census,
    "bruteforce": cmd_bruteforce,
}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        if args.command == "verify":
            return cmd_verify(cfg, args)
        COMMANDS[args.command](cfg)
        return 0
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except (ValueError, RuntimeError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
