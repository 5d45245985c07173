"""Command-line front end.

Exit codes: 0 success, 2 bad configuration or input, 3 numerical failure.
Every CSV written is accompanied by a ``.manifest.json`` next to it.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import logging
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .dynamics import Trajectory, solve_fqd, solve_maqd
from .errors import ConfigError, MQEDError, NumericalError, UnrecognizedHeader
from .greens import greens_tensor, spectral_density_value
from .model import DrudeHalfSpace, Emitter, LorentzianBath, validate_config
from .weak import weak_coupling_report

log = logging.getLogger("mqed")

COMPONENTS = "xyz"


# -- helpers -----------------------------------------------------------------

def _fmt(x):
    return f"{x:.17g}"


def _csv_text(header, rows):
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _emit(out_dir, name, text, cfg, timings, **extra):
    """Write one CSV and its manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.csv"
    path.write_text(text)
    io.write_manifest(out_dir / f"{name}.manifest.json", io.manifest(cfg, [path], timings, **extra))
    print(path)
    return path


def _load(args):
    if args.preset and args.config:
        raise io.ConfigFormatError("give either a config file or --preset, not both")
    if args.preset:
        cfg = io.preset(args.preset)
    elif args.config:
        cfg = io.load_config(args.config)
    else:
        raise io.ConfigFormatError("a config file or --preset is required")
    if getattr(args, "tol", None) is not None:
        if not args.tol > 0:
            raise io.ConfigFormatError("--tol must be > 0")
        cfg = cfg.with_(tolerances=replace(cfg.tolerances, quad=args.tol, tabulation=args.tol))
    return cfg


def _stem(args):
    if args.preset:
        return args.preset
    return Path(args.config).stem


def _variants(cfg, args):
    """The (method, rwa) runs requested. A bare preset runs FQD and MAQD with and without the RWA."""
    if args.preset and args.method is None and args.rwa is None:
        return [(m, r) for m in ("fqd", "maqd") for r in (False, True)]
    method = args.method or cfg.method
    rwa = cfg.rwa if args.rwa is None else args.rwa
    return [(method, rwa)]


def _run(cfg, cache):
    """Solve one config, reusing the spectral table and Markov report across runs."""
    if cfg.method == "fqd":
        if "spectra" not in cache:
            from .kernels import tabulate_spectra
            cache["spectra"] = tabulate_spectra(cfg)
        return solve_fqd(cfg, spectra=cache["spectra"])
    if cfg.method == "maqd":
        if "report" not in cache:
            cache["report"] = weak_coupling_report(cfg.emitters, cfg.environment, omega_max=cfg.omega_max)
        return solve_maqd(cfg, cache["report"])
    from .oracle import build_pseudomodes_for, solve_oracle
    if "modes" not in cache:
        cache["modes"] = build_pseudomodes_for(cfg)
    return solve_oracle(cache["modes"], cfg)


def _traj_meta(tr):
    return {k: v for k, v in tr.meta.items() if k != "H"}


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args):
    base = _load(args)
    configs = [base.with_(method=m, rwa=r) for m, r in _variants(base, args)]
    for c in configs:
        validate_config(c)
    cache = {}
    results = []
    for c in configs:
        t0 = time.perf_counter()
        tr = _run(c, cache)
        results.append((c, tr, time.perf_counter() - t0))
    out = Path(args.out)
    for c, tr, sec in results:
        name = f"{_stem(args)}_{c.method}_{'rwa' if c.rwa else 'norwa'}"
        buf = _stdio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(tr.header())
        for row in tr.rows():
            w.writerow([_fmt(x) for x in row])
        _emit(out, name, buf.getvalue(), c, {"solve": sec}, solver=_traj_meta(tr))
    return 0


WEAK_HEADER = ["row", "a", "b", "gamma", "delta_e_sc", "delta_g_sc", "re_v_rddi", "im_v_rddi",
               "v_orc", "v_qc", "re_v_ddi", "re_v_ddi_rwa", "ratio"]


def weak_rows(report, n):
    rows = []
    for a in range(n):
        rows.append(["emitter", a, "", report.gamma[a], report.shift_excited[a], report.shift_ground[a]]
                    + [""] * 7)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            p = report.pairs[(a, b)]
            full, rwa = p.v_ddi.real, p.v_ddi_rwa.real
            ratio = full / rwa if rwa != 0 else float("nan")
            rows.append(["pair", a, b, "", "", "", p.v_rddi.real, p.v_rddi.imag, float(p.v_orc),
                         float(p.v_qc), full, rwa, ratio])
    return rows


def cmd_weakcoupling(args):
    cfg = validate_config(_load(args))
    t0 = time.perf_counter()
    rep = weak_coupling_report(cfg.emitters, cfg.environment, omega_max=cfg.omega_max)
    sec = time.perf_counter() - t0
    _emit(Path(args.out), f"{_stem(args)}_weak", _csv_text(WEAK_HEADER, weak_rows(rep, cfg.n)), cfg,
          {"weak": sec})
    return 0


def cmd_greens(args):
    cfg = validate_config(_load(args))
    if isinstance(cfg.environment, LorentzianBath):
        raise io.ConfigFormatError("a model bath has no Green's function")
    a, b = args.pair
    if not (0 <= a < cfg.n and 0 <= b < cfg.n):
        raise io.ConfigFormatError(f"--pair {a} {b}: only {cfg.n} emitter(s)")
    part = args.part or ("scattering" if a == b else "total")
    if a == b and part != "scattering":
        raise io.ConfigFormatError("the free Green's function diverges at coincident points; "
                                   "use --part scattering for a == b")
    ea, eb = cfg.emitters[a], cfg.emitters[b]
    wmax = args.wmax or 2.0 * max(ea.omega, eb.omega)
    if args.n < 2 or not 0 < args.wmin < wmax:
        raise io.ConfigFormatError("need --n >= 2 and 0 < --wmin < --wmax")
    header = ["omega"] + [f"{p}_G_{i}{j}" for i in COMPONENTS for j in COMPONENTS for p in ("Re", "Im")] + ["J"]
    t0 = time.perf_counter()
    rows = []
    for w in np.linspace(args.wmin, wmax, args.n):
        g = greens_tensor(ea.r, eb.r, w, cfg.environment, part, tol=cfg.tolerances.quad).value
        row = [float(w)]
        for i in range(3):
            for j in range(3):
                row += [float(g[i, j].real), float(g[i, j].imag)]
        rows.append(row + [float(spectral_density_value(ea, eb, w, cfg.environment, part))])
    _emit(Path(args.out), f"{_stem(args)}_greens_{a}{b}", _csv_text(header, rows), cfg,
          {"greens": time.perf_counter() - t0}, pair=[a, b], part=part)
    return 0


def parse_values(args):
    if args.values:
        try:
            vals = [float(x) for x in args.values.split(",") if x.strip()]
        except ValueError:
            raise io.ConfigFormatError(f"--values: cannot parse {args.values!r}") from None
    elif args.range:
        start, stop, num = args.range
        vals = list(np.linspace(start, stop, int(num))) if num >= 1 else []
    else:
        vals = []
    if not vals:
        raise io.ConfigFormatError("empty sweep range")
    return [float(v) for v in vals]


def sweep_config(cfg, axis, value):
    ems = list(cfg.emitters)
    if axis == "h":
        if not isinstance(cfg.environment, DrudeHalfSpace):
            raise io.ConfigFormatError("axis h needs a half-space environment")
        ems = [Emitter((e.position[0], e.position[1], value), e.omega, e.dipole) for e in ems]
    else:
        if len(ems) < 2:
            raise io.ConfigFormatError(f"axis {axis} needs at least two emitters")
        e0, e1 = ems[0], ems[1]
        if axis == "d":
            ems[1] = Emitter((e0.position[0] + value, e0.position[1], e1.position[2]), e1.omega, e1.dipole)
        else:
            ems[1] = Emitter(e1.position, e0.omega + value, e1.dipole)
    return cfg.with_(emitters=tuple(ems))


def _sweep_job(cfg, what):
    if what == "weak":
        rep = weak_coupling_report(cfg.emitters, cfg.environment, omega_max=cfg.omega_max)
        return weak_rows(rep, cfg.n)
    tr = _run(cfg, {})
    return [list(r) for r in tr.rows()]


def cmd_sweep(args):
    base = _load(args)
    if args.method is not None:
        base = base.with_(method=args.method)
    if args.rwa is not None:
        base = base.with_(rwa=args.rwa)
    values = parse_values(args)
    subs = [validate_config(sweep_config(base, args.axis, v)) for v in values]
    t0 = time.perf_counter()
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_job, subs, [args.what] * len(subs)))
    else:
        results = [_sweep_job(c, args.what) for c in subs]
    if args.what == "weak":
        header = ["axis", "value"] + WEAK_HEADER
    else:
        header = ["axis", "value"] + Trajectory(np.zeros(1), np.zeros((1, base.n)), "", False).header()
    rows = [[args.axis, v] + r for v, res in zip(values, results) for r in res]
    name = f"{_stem(args)}_sweep_{args.axis}_{args.what}"
    _emit(Path(args.out), name, _csv_text(header, rows), base, {"sweep": time.perf_counter() - t0},
          axis=args.axis, values=values, sub_configs=[io.config_hash(c) for c in subs])
    return 0


_TRAJ = re.compile(r"^t((?:,Re_C_\d+,Im_C_\d+)+)((?:,P_\d+)+),P_total$")


def trajectory_columns(header_line):
    """Number of emitters in a Trajectory CSV header, or UnrecognizedHeader."""
    line = header_line.strip()
    m = _TRAJ.match(line)
    if m:
        n = line.count("Re_C_")
        expected = Trajectory(np.zeros(1), np.zeros((1, n)), "", False).header()
        if line == ",".join(expected):
            return n
    raise UnrecognizedHeader(f"not a trajectory header: {line[:80]!r}")


_SCRIPT = '''"""Population dynamics plot generated by mqed plotscript."""
import csv
import sys

import matplotlib.pyplot as plt

FILES = {files!r}
PANELS = {panels!r}
TITLES = {titles!r}


def load(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}}


data = [(label, load(path)) for label, path in FILES]
fig, axes = plt.subplots(1, len(PANELS), figsize=(4.2 * len(PANELS), 3.4), squeeze=False)
for ax, col, title in zip(axes[0], PANELS, TITLES):
    for label, d in data:
        ax.plot(d["t"], d[col], label=label)
    ax.set_title(title)
    ax.set_xlabel("t (hbar/eV)")
    ax.set_ylabel("population")
axes[0][0].legend()
fig.tight_layout()
if len(sys.argv) > 1:
    fig.savefig(sys.argv[1], dpi=150)
else:
    plt.show()
'''


def plot_script(csv_paths):
    """Source of a matplotlib script overlaying the given trajectory CSVs."""
    ns = []
    for p in csv_paths:
        with open(p) as fh:
            ns.append(trajectory_columns(fh.readline()))
    if len(set(ns)) != 1:
        raise UnrecognizedHeader("overlaid CSVs have different emitter counts")
    n = ns[0]
    if n == 1:
        panels, titles = ["P_0"], ["emitter"]
    elif n == 2:
        panels, titles = ["P_0", "P_1", "P_total"], ["donor", "acceptor", "total"]
    else:
        panels = [f"P_{i}" for i in range(n)] + ["P_total"]
        titles = [f"emitter {i}" for i in range(n)] + ["total"]
    files = [(Path(p).stem, os.path.abspath(p)) for p in csv_paths]
    return _SCRIPT.format(files=files, panels=panels, titles=titles)


def cmd_plotscript(args):
    paths = [args.csv] + list(args.overlay or [])
    text = plot_script(paths)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"{Path(args.csv).stem}_plot.py"
    dest.write_text(text)
    print(dest)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="mqed", description="Emitter dynamics in macroscopic QED.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, method=True):
        sp.add_argument("config", nargs="?", help="JSON configuration file")
        sp.add_argument("--preset", choices=sorted(io.PRESETS))
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--tol", type=float, help="tolerance for quadrature and spectral tabulation")
        if method:
            sp.add_argument("--method", choices=("fqd", "maqd", "oracle"))
            sp.add_argument("--rwa", action=argparse.BooleanOptionalAction, default=None)

    s = sub.add_parser("simulate", help="propagate amplitudes and write a trajectory CSV")
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("weakcoupling", help="decay rates, energy shifts and pair couplings")
    common(s, method=False)
    s.set_defaults(func=cmd_weakcoupling)

    s = sub.add_parser("greens", help="Green's tensor and spectral density over a frequency range")
    common(s, method=False)
    s.add_argument("--pair", type=int, nargs=2, default=(0, 1), metavar=("A", "B"))
    s.add_argument("--part", choices=("free", "scattering", "total"))
    s.add_argument("--wmin", type=float, default=0.1)
    s.add_argument("--wmax", type=float)
    s.add_argument("--n", type=int, default=201)
    s.set_defaults(func=cmd_greens)

    s = sub.add_parser("sweep", help="repeat a run along d, h or detuning")
    common(s)
    s.add_argument("--axis", choices=("d", "h", "detuning"), required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--values", help="comma-separated axis values")
    g.add_argument("--range", type=float, nargs=3, metavar=("START", "STOP", "NUM"))
    s.add_argument("--what", choices=("trajectory", "weak"), default="trajectory")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("plotscript", help="write a matplotlib script for trajectory CSVs")
    s.add_argument("csv")
    s.add_argument("--overlay", nargs="*", help="more trajectory CSVs drawn on the same panels")
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_plotscript)
    return p


def main(argv=None):
    level = os.environ.get("MQED_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"mqed: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, MQEDError) as exc:
        print(f"mqed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
