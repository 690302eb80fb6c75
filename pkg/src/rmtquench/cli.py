"""Command-line experiment runner.

Every data subcommand writes one CSV per curve into ``--out`` plus a JSON
manifest named ``<subcommand>.manifest.json``; CSV files are named
``<subcommand>_<labels>.csv`` so each one maps back to its manifest by prefix.

Exit codes: 0 success, 1 failed validation or replay mismatch, 2 bad
arguments, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import analytic as an
from . import montecarlo as mc
from ._backend import BACKEND
from .scrambling import UnsupportedSizeError, echo_from_correlators

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_SEED = 7
MODES = ("analytic", "mc-annealed", "mc-exact")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- parsing

def parse_grid(text: str, log: bool = False) -> np.ndarray:
    """``start:stop:count`` to a linear (or geometric) grid including both ends."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:count, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from None
    if n < 1 or (n > 1 and not b > a):
        raise UsageError(f"grid {text!r} needs count >= 1 and stop > start")
    if log:
        if a <= 0:
            raise UsageError("log grid needs start > 0")
        return np.geomspace(a, b, n)
    return np.linspace(a, b, n)


def parse_values(text: str) -> np.ndarray:
    """Comma list ``0,0.5,1`` or grid ``start:stop:count``."""
    if ":" in text:
        return parse_grid(text)
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise UsageError(f"bad value list {text!r}: {exc}") from None


def parse_ints(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}: {exc}") from None
    if not vals:
        raise UsageError("empty integer list")
    return vals


def _default_seed():
    env = os.environ.get("RMT_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"RMT_SEED must be an integer, got {env!r}") from None


def _add_common(p):
    p.add_argument("--N", default="5", help="comma-separated dimensions")
    p.add_argument("--beta", default="0", help="comma list or start:stop:count")
    p.add_argument("--t", dest="t", default=None, help="linear time grid start:stop:count")
    p.add_argument("--tlog", default=None, help="log-spaced time grid start:stop:count")
    p.add_argument("--mode", choices=MODES, default="analytic")
    p.add_argument("--pairs", type=int, default=5000, help="Monte-Carlo pairs (or draws)")
    p.add_argument("--seed", type=int, default=None, help="root seed (default: $RMT_SEED or 7)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", default=None, help="key = value file overriding defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtquench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rmtquench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    helps = {
        "chi": "characteristic function of the work",
        "work-pdf": "work probability density",
        "mean-work": "mean work versus beta",
        "variance": "work variance versus beta",
        "sff": "spectral form factor",
        "echo": "Loschmidt echo",
        "frame-potential": "first frame potential",
        "scramble-check": "Pauli correlator sum versus the infinite-temperature echo",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _add_common(p)
        if name == "work-pdf":
            p.add_argument("--W", default=None, help="work grid start:stop:count (analytic); write --W=-6:6:61 for a negative start")
            p.add_argument("--bins", type=int, default=80, help="histogram bins (Monte-Carlo)")
        if name in ("echo", "frame-potential"):
            p.add_argument("--window", default=None, help="time-average window start:stop")
        if name == "scramble-check":
            p.add_argument("--qubits", type=int, default=1)

    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("replay", help="re-run a manifest and compare checksums")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="directory for the re-run (default: temporary)")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("gnuplot-script", help="emit a gnuplot script for a manifest's CSVs")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="script path (default: stdout)")
    parser.commands = sub.choices
    return parser


def _read_config(path):
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep "N" and "W" case-sensitive
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    return dict(cp["run"])


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        overrides = _read_config(args.config)
        subparser = parser.commands[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(overrides) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        # explicit flags beat the config file, the config file beats defaults
        subparser.set_defaults(**overrides)
        args = parser.parse_args(argv)
    if getattr(args, "mode", "analytic") not in MODES:
        raise UsageError(f"mode must be one of {MODES}")
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    return args


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def csv_bytes(header, columns) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _label(x) -> str:
    return ("%g" % x).replace("-", "m")


class Run:
    """Collects curves of one subcommand invocation."""

    def __init__(self, command, params):
        self.command = command
        self.params = params
        self.files = {}
        self.derived = {}

    def add(self, labels, header, columns, **derived):
        name = "_".join([self.command.replace("-", "_")] + list(labels)) + ".csv"
        self.files[name] = csv_bytes(header, columns)
        if derived:
            self.derived[name] = {k: _jsonable(v) for k, v in derived.items()}

    def write(self, out_dir, wall):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        outputs = []
        for name, body in self.files.items():
            (out / name).write_bytes(body)
            outputs.append({"file": name, "sha256": hashlib.sha256(body).hexdigest(), "bytes": len(body)})
        manifest = {
            "subcommand": self.command,
            "params": self.params,
            "version": __version__,
            "backend": BACKEND,
            "wall_clock_s": wall,
            "created_unix": time.time(),
            "outputs": outputs,
            "derived": self.derived,
        }
        path = out / f"{self.command}.manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    return v


# ---------------------------------------------------------------- commands

def _times(args):
    if args.t and args.tlog:
        raise UsageError("give either --t or --tlog, not both")
    if args.tlog:
        return parse_grid(args.tlog, log=True), "log"
    return parse_grid(args.t or "0:3:300"), "linear"


def _mc_mode(args):
    return "exact" if args.mode == "mc-exact" else "annealed"


def _window(args, t):
    if not getattr(args, "window", None):
        return None
    try:
        a, b = (float(v) for v in args.window.split(":"))
    except ValueError:
        raise UsageError(f"window must be start:stop, got {args.window!r}") from None
    if not np.any((t >= a) & (t <= b)):
        raise UsageError("window contains no grid points")
    return a, b


def cmd_chi(args, run):
    t, _ = _times(args)
    for N in parse_ints(args.N):
        for beta in parse_values(args.beta):
            labels = (f"N{N}", f"beta{_label(beta)}")
            if args.mode == "analytic":
                c = an.chi(N, beta, t)
                run.add(labels, ["t", "re", "im"], [t, c.real, c.imag])
            elif args.mode == "mc-exact":
                raise UsageError("chi is sampled in annealed form only; use --mode mc-annealed")
            else:
                c = mc.mc_chi(N, beta, t, args.pairs, args.seed, threads=args.threads)
                ref = an.chi(N, beta, t)
                run.add(labels, ["t", "re", "im", "re_se", "im_se", "analytic_re", "analytic_im"],
                        [t, c.values.real, c.values.imag, c.stderr.real, c.stderr.imag, ref.real, ref.imag])


def cmd_work_pdf(args, run):
    for N in parse_ints(args.N):
        for beta in parse_values(args.beta):
            labels = (f"N{N}", f"beta{_label(beta)}")
            if args.mode == "analytic":
                if args.W:
                    W = parse_grid(args.W)
                else:
                    edge = 2.0 * math.sqrt(2.0 * N) + 8.0
                    W = np.linspace(-edge, edge + beta, 401)
                c = an.work_pdf(N, beta, W)
                run.add(labels, ["W", "p"], [W, c.values], quad_err=c.meta["quad_err"])
            else:
                h = mc.mc_work_pdf(N, beta, args.pairs, args.bins, args.seed, mode=_mc_mode(args),
                                   threads=args.threads)
                run.add(labels, ["W_lo", "W_hi", "W_center", "mass", "density", "mass_se"],
                        [h.edges[:-1], h.edges[1:], h.centers, h.mass, h.density, h.stderr],
                        mean=h.mean, mean_se=h.mean_stderr, analytic_mean=an.mean_work(N, beta))


def _beta_curve(args, run, analytic_fn, series_fn, mc_fn, name):
    betas = parse_values(args.beta)
    if betas.size > 1 and not np.all(np.diff(betas) > 0):
        raise UsageError("beta values must be strictly ascending")
    for N in parse_ints(args.N):
        ref = np.array([analytic_fn(N, b) for b in betas])
        if args.mode == "analytic":
            run.add((f"N{N}",), ["beta", name, "high_t_series"],
                    [betas, ref, [series_fn(N, b) for b in betas]])
        else:
            est = mc_fn(N, betas, args.pairs, args.seed, mode=_mc_mode(args), threads=args.threads)
            run.add((f"N{N}",), ["beta", name, "stderr", "analytic"], [betas, est.value, est.stderr, ref])


def cmd_mean_work(args, run):
    _beta_curve(args, run, an.mean_work, an.mean_work_high_t, mc.mc_mean_work, "mean_work")


def cmd_variance(args, run):
    _beta_curve(args, run, an.work_variance, an.work_variance_high_t, mc.mc_work_variance, "variance")


def cmd_sff(args, run):
    if args.mode != "analytic":
        raise UsageError("sff is available in analytic mode only")
    t, _ = _times(args)
    for N in parse_ints(args.N):
        for beta in parse_values(args.beta):
            g = an.form_factor(N, beta, t)
            gc = an.connected_ff(N, beta, t)
            run.add((f"N{N}", f"beta{_label(beta)}"), ["t", "form_factor", "connected", "disconnected"],
                    [t, g, gc, g - gc])


def cmd_echo(args, run):
    t, _ = _times(args)
    win = _window(args, t)
    for N in parse_ints(args.N):
        for beta in parse_values(args.beta):
            labels = (f"N{N}", f"beta{_label(beta)}")
            ref = an.loschmidt_echo(N, beta, t)
            plateau = an.echo_plateau(N, beta)
            if args.mode == "analytic":
                run.add(labels, ["t", "echo"], [t, ref], plateau=plateau)
            else:
                c = mc.mc_loschmidt(N, beta, t, args.pairs, args.seed, mode=_mc_mode(args), window=win,
                                    threads=args.threads)
                extra = {k: c.meta[k] for k in ("exact_plateau", "exact_plateau_stderr", "window_mean",
                                                "window_stderr") if k in c.meta}
                run.add(labels, ["t", "echo", "stderr", "analytic"], [t, c.values, c.stderr, ref],
                        plateau=plateau, **extra)


def cmd_frame_potential(args, run):
    t, _ = _times(args)
    win = _window(args, t)
    for N in parse_ints(args.N):
        if args.mode == "analytic":
            for beta in parse_values(args.beta):
                run.add((f"N{N}", f"beta{_label(beta)}"), ["t", "F1"], [t, an.frame_potential_1(N, beta, t)])
        else:
            c = mc.mc_frame_potential(N, t, args.pairs, args.seed, window=win, threads=args.threads)
            extra = {k: c.meta[k] for k in ("window_mean", "window_stderr") if k in c.meta}
            run.add((f"N{N}",), ["t", "F1", "stderr", "analytic"],
                    [t, c.values, c.stderr, an.frame_potential_1(N, 0.0, t)], **extra)


def cmd_scramble_check(args, run):
    t, _ = _times(args)
    N = 2**args.qubits
    corr = echo_from_correlators(args.qubits, t, args.pairs, args.seed)
    echo = mc.mc_loschmidt(N, 0.0, t, args.pairs, args.seed, threads=args.threads)
    z = (corr.value - echo.values) / np.maximum(np.hypot(corr.stderr, echo.stderr), 1e-300)
    run.add((f"q{args.qubits}",), ["t", "correlator", "correlator_se", "echo_mc", "echo_mc_se", "echo_analytic", "z"],
            [t, corr.value, corr.stderr, echo.values, echo.stderr, an.loschmidt_echo(N, 0.0, t), z])


COMMANDS = {
    "chi": cmd_chi,
    "work-pdf": cmd_work_pdf,
    "mean-work": cmd_mean_work,
    "variance": cmd_variance,
    "sff": cmd_sff,
    "echo": cmd_echo,
    "frame-potential": cmd_frame_potential,
    "scramble-check": cmd_scramble_check,
}


def _params(args):
    skip = {"command", "out", "config", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _replay_argv(manifest):
    argv = [manifest["subcommand"]]
    for k, v in manifest["params"].items():
        if v is not None:
            argv.append(f"--{k}={v}")  # '=' form keeps negative grids like -6:6:61 intact
    return argv


def cmd_replay(args):
    path = Path(args.manifest)
    manifest = json.loads(path.read_text())
    out = args.out or tempfile.mkdtemp(prefix="rmtquench-replay-")
    argv = _replay_argv(manifest) + ["--out", out]
    if args.threads:
        argv += ["--threads", str(args.threads)]
    code = main(argv)
    if code != EXIT_OK:
        return code
    fresh = json.loads((Path(out) / path.name).read_text())
    old = {o["file"]: o["sha256"] for o in manifest["outputs"]}
    new = {o["file"]: o["sha256"] for o in fresh["outputs"]}
    if old != new:
        bad = sorted(k for k in old.keys() | new.keys() if old.get(k) != new.get(k))
        print(f"replay mismatch: {', '.join(bad)}", file=sys.stderr)
        return EXIT_FAIL
    print(f"replay ok: {len(old)} file(s) identical")
    return EXIT_OK


def gnuplot_script(manifest) -> str:
    sub = manifest["subcommand"]
    files = [o["file"] for o in manifest["outputs"]]
    params = manifest["params"]
    lines = ["set datafile separator ','", "set key autotitle columnhead", "set grid"]
    if params.get("tlog"):
        lines.append("set logscale x")
    # binned work histograms plot density against bin centre
    using = "3:5" if sub == "work-pdf" and params.get("mode") != "analytic" else "1:2"
    plots = [f"'{f}' using {using} with lines title '{f[:-4]}'" for f in files]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def cmd_validate(args):
    from .acceptance import run_all

    only = set(parse_ints(args.only)) if args.only else None
    results = run_all(threads=args.threads, only=only)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except UsageError as exc:
        print(f"rmtquench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rmtquench: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "gnuplot-script":
            text = gnuplot_script(json.loads(Path(args.manifest).read_text()))
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        run = Run(args.command, _params(args))
        t0 = time.perf_counter()
        COMMANDS[args.command](args, run)
        path = run.write(args.out, time.perf_counter() - t0)
        print(f"wrote {len(run.files)} CSV file(s) and {path}")
        return EXIT_OK
    except OSError as exc:
        print(f"rmtquench: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"rmtquench: bad manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, UnsupportedSizeError, mc.InsufficientSamplesError, ValueError) as exc:
        print(f"rmtquench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
