"""``lp-euler`` command line interface.

Exit codes: 0 success, 2 validation error, 3 numerical blow-up stop,
1 internal error.  Diagnostics go to standard error; data goes to the files
named on the command line (``norm`` and ``report`` also print to stdout).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from scipy import fft as sfft

from . import __version__
from .core import FORMAT_VERSION, Grid, VectorField, read_field, read_vector_field, write_field, write_vector_field
from .errors import LPError

log = logging.getLogger("lp-euler")

EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION, EXIT_BLOWUP = 0, 1, 2, 3

REPORT_KEYS = ("id", "grid", "seed", "trials", "excluded", "max_ratio", "mean_ratio", "p95_ratio", "per_trial")
SUMMARY_KEYS = ("u0_f_norm", "fitted_C0", "T0_estimate", "blowup_stop", "global_check")


class ValidationError(Exception):
    """Bad user input detected by the CLI layer."""


# ------------------------------------------------------------- formatting

def fmt_float(x):
    """17 significant digits; non-finite values as inf / -inf / nan."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        s = fmt_float(obj)
        return s if math.isfinite(obj) else json.dumps(s)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):
        return _encode(obj.item(), indent, level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=1):
    """JSON text with every float printed to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def _write_text(path, text):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    command: str
    argv: list
    seeds: list = field(default_factory=list)
    grid: dict | None = None
    wall_time: float = 0.0
    outputs: dict = field(default_factory=dict)

    def add_output(self, path):
        path = Path(path)
        if path.is_dir():
            files = sorted(p for p in path.rglob("*") if p.is_file() and not p.name.endswith("manifest.json"))
            files += [path / "manifest.json"] if (path / "manifest.json").is_file() else []
        else:
            files = [path]
        for p in files:
            self.outputs[str(p)] = sha256_file(p)

    def to_dict(self):
        return {
            "command": self.command,
            "argv": list(self.argv),
            "seeds": list(self.seeds),
            "version": {"tool": __version__, "field_format": FORMAT_VERSION},
            "grid": self.grid,
            "wall_time": self.wall_time,
            "outputs": self.outputs,
        }

    def write(self, path):
        _write_text(path, dumps(self.to_dict()))


def _manifest_path(args, primary):
    if getattr(args, "manifest", None):
        return Path(args.manifest)
    primary = Path(primary)
    if primary.is_dir():
        return primary / "run.manifest.json"
    return primary.with_name(primary.name + ".manifest.json")


def _finish_manifest(args, argv, manifest, outputs, t0):
    if not outputs:
        return
    for out in outputs:
        manifest.add_output(out)
    manifest.wall_time = time.perf_counter() - t0
    manifest.argv = list(argv)
    manifest.write(_manifest_path(args, outputs[0]))


# ----------------------------------------------------------------- inputs

def _load_any(path):
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"input not found: {p}")
    if p.is_dir():
        return read_vector_field(p)
    return read_field(p)


def _load_scalar(path):
    f = _load_any(path)
    if isinstance(f, VectorField):
        raise ValidationError(f"{path}: expected a scalar field file")
    return f


def _load_vector(path):
    f = _load_any(path)
    if not isinstance(f, VectorField):
        raise ValidationError(f"{path}: expected a vector field directory")
    return f


# ----------------------------------------------------------- subcommands

def cmd_decompose(args, manifest):
    from .lp import decompose

    f = _load_scalar(args.infile)
    dec = decompose(f, homogeneous=args.homogeneous)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for j, band in dec.bands.items():
        name = f"band_{j:+d}.fld"
        write_field(band, out / name)
        files.append({"j": j, "file": name})
    meta = {
        "j_min": dec.j_min,
        "j_max": dec.j_max,
        "homogeneous": dec.homogeneous,
        "profile": dec.profile.name,
        "reconstruction_error": dec.reconstruction_error,
        "bands": files,
    }
    _write_text(out / "manifest.json", dumps(meta))
    manifest.grid = f.grid.to_dict()
    log.info("wrote %d bands to %s (reconstruction error %.3e)", len(files), out, dec.reconstruction_error)
    return [out]


def cmd_norm(args, manifest):
    from . import norms

    f = _load_any(args.infile)
    space = args.space
    if space in ("tl", "besov") and args.s is None:
        raise ValidationError(f"--s is required for --space {space}")
    if space == "lp":
        value = norms.lp_norm(f, args.p)
    elif space == "linf":
        value = norms.linf_norm(f)
    elif space == "w1inf":
        value = norms.w1inf_norm(f)
    elif space == "tl":
        value = norms.tl_norm(f, args.s, args.homogeneous, args.oversample)
    else:
        value = norms.besov_norm(f, args.s, args.p, args.q, args.homogeneous)
    text = dumps(value.to_dict())
    sys.stdout.write(text)
    manifest.grid = f.grid.to_dict()
    if args.json:
        return [_write_text(args.json, text)]
    return []


def cmd_project(args, manifest):
    from .ops import divergence_defect, leray

    u = _load_vector(args.infile)
    pu = leray(u)
    write_vector_field(pu, args.out)
    manifest.grid = u.grid.to_dict()
    log.info("divergence defect before %.3e, after %.3e", divergence_defect(u), divergence_defect(pu))
    return [Path(args.out)]


def cmd_bony(args, manifest):
    from .para import bony

    f, g = _load_scalar(args.f), _load_scalar(args.g)
    if f.grid != g.grid:
        raise ValidationError("--f and --g live on different grids")
    dec = bony(f, g, homogeneous=args.homogeneous)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_field(dec.para_fg, out / "para_fg.fld")
    write_field(dec.para_gf, out / "para_gf.fld")
    write_field(dec.remainder, out / "remainder.fld")
    report = {
        "grid": f.grid.to_dict(),
        "homogeneous": args.homogeneous,
        "residual": dec.residual,
        "parts": ["para_fg.fld", "para_gf.fld", "remainder.fld"],
    }
    _write_text(out / "report.json", dumps(report))
    manifest.grid = f.grid.to_dict()
    log.info("bony residual %.3e", dec.residual)
    return [out]


def cmd_verify(args, manifest):
    from .verify import FieldGenSpec, run_inequality

    grid = Grid(args.d, args.n, args.L)
    bands = tuple(args.bands) if args.bands else None
    spec = FieldGenSpec(seed=args.seed, band_range=bands, slope=args.slope, amplitude=args.amplitude)
    report = run_inequality(args.id, spec, args.trials, grid, args.s, workers=args.threads)
    manifest.seeds = [args.seed]
    manifest.grid = grid.to_dict()
    log.info(
        "%s n=%d: max_ratio %s, excluded %d/%d%s",
        args.id,
        args.n,
        report.max_ratio,
        report.excluded,
        report.n_trials,
        " (degenerate)" if report.degenerate else "",
    )
    return [_write_text(args.json, dumps(report.to_dict()))]


def cmd_simulate(args, manifest):
    from . import euler2d

    grid = Grid(2, args.n, args.L)
    init = args.init if args.init else args.preset
    cfg = euler2d.SimConfig(
        grid=grid,
        dt=args.dt,
        t_end=args.t_end,
        s=args.s,
        C0=args.C0,
        initial_condition=init,
        seed=args.seed,
        slope=args.slope,
        dealias=not args.no_dealias,
        monitor_period=args.monitor_period,
    )
    traj = euler2d.simulate(cfg)
    fitted = euler2d.fit_C0(traj) if len(traj.records) >= 2 else 1.0
    C0 = cfg.C0 if cfg.C0 is not None else fitted
    check = euler2d.two_d_global_check(traj)
    summary = {
        "u0_f_norm": traj.u0_f_norm,
        "fitted_C0": fitted,
        "T0_estimate": euler2d.blowup_time(traj.u0_f_norm, C0),
        "blowup_stop": traj.stopped,
        "global_check": "pass" if check.passed else "fail",
        "stop_reason": traj.stop_reason,
        "global_check_detail": check.to_dict(),
        "samples": len(traj.records),
        "config": cfg.to_dict(),
    }
    outputs = []
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(euler2d.CSV_COLUMNS)
        for row in traj.rows():
            w.writerow([fmt_float(v) for v in row])
        outputs.append(_write_text(args.csv, buf.getvalue()))
    if args.json:
        outputs.append(_write_text(args.json, dumps(summary)))
    manifest.seeds = [args.seed]
    manifest.grid = grid.to_dict()
    log.info("simulated to t=%s in %d samples; blow-up stop: %s", traj.final_state.t, len(traj.records), traj.stopped)
    if traj.stopped:
        log.error("%s", traj.stop_reason)
    return outputs, (EXIT_BLOWUP if traj.stopped else EXIT_OK)


def _classify(path, data):
    if isinstance(data, dict) and all(k in data for k in REPORT_KEYS):
        return "inequality"
    if isinstance(data, dict) and all(k in data for k in SUMMARY_KEYS):
        return "simulation"
    raise ValidationError(f"{path}: not an inequality report or simulation summary")


def consolidate(inputs):
    """Merge inequality reports and simulation summaries.

    Returns ``(summary, table)``.  Inputs are only read.
    """
    ineq, sims, seen = [], [], {}
    for path in inputs:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ValidationError(f"input not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
        kind = _classify(path, data)
        if kind == "simulation":
            sims.append(dict(data, source=str(path)))
            continue
        g = data["grid"]
        key = (data["id"], g.get("d"), g.get("L"), g.get("n"))
        if key in seen:
            raise ValidationError(f"{path}: duplicate report for id={data['id']} n={g.get('n')} (also {seen[key]})")
        seen[key] = str(path)
        ineq.append(
            {
                "id": data["id"],
                "n": g.get("n"),
                "d": g.get("d"),
                "L": g.get("L"),
                "trials": data["trials"],
                "excluded": data["excluded"],
                "max_ratio": data["max_ratio"],
                "mean_ratio": data["mean_ratio"],
                "p95_ratio": data["p95_ratio"],
                "source": str(path),
            }
        )
    ineq.sort(key=lambda r: (r["id"], r["d"], r["L"], r["n"]))
    stability = []
    groups = {}
    for r in ineq:
        groups.setdefault((r["id"], r["d"], r["L"]), []).append(r)
    for (iid, d, L), rows in groups.items():
        if len(rows) < 2:
            continue
        first, last = rows[0]["max_ratio"], rows[-1]["max_ratio"]
        if first is None or last is None:
            growth = None
        elif first == 0:
            growth = 1.0 if last == 0 else math.inf
        else:
            growth = last / first
        stability.append(
            {
                "id": iid,
                "d": d,
                "L": L,
                "resolutions": [r["n"] for r in rows],
                "growth": growth,
                "stable": growth is not None and growth <= 2.0,
            }
        )
    summary = {"inequalities": ineq, "stability": stability, "simulations": sims}
    lines = []
    if ineq:
        lines.append(f"{'id':<12}{'n':>6}{'trials':>8}{'excl':>6}{'max_ratio':>14}{'mean_ratio':>14}")
        for r in ineq:
            mx = "-" if r["max_ratio"] is None else f"{r['max_ratio']:.6g}"
            mn = "-" if r["mean_ratio"] is None else f"{r['mean_ratio']:.6g}"
            lines.append(f"{r['id']:<12}{r['n']:>6}{r['trials']:>8}{r['excluded']:>6}{mx:>14}{mn:>14}")
    for st in stability:
        g = "-" if st["growth"] is None else f"{st['growth']:.4g}"
        lines.append(f"stability {st['id']} n={st['resolutions']}: growth {g} ({'ok' if st['stable'] else 'FAIL'})")
    for sm in sims:
        lines.append(
            f"simulation {sm['source']}: C0={sm['fitted_C0']:.6g} T0~{sm['T0_estimate']:.6g} "
            f"blow-up={sm['blowup_stop']} global={sm['global_check']}"
        )
    return summary, "\n".join(lines) + ("\n" if lines else "")


def cmd_report(args, manifest):
    summary, table = consolidate(args.inputs)
    sys.stdout.write(table)
    if args.json:
        return [_write_text(args.json, dumps(summary))]
    return []


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="lp-euler", description="Littlewood-Paley toolkit and 2D Euler diagnostics.")
    p.add_argument("--version", action="version", version=f"lp-euler {__version__} (field format {FORMAT_VERSION})")
    p.add_argument("--threads", type=int, default=1, help="cap on internal parallelism (results do not depend on it)")
    p.add_argument("--manifest", help="run manifest path (default: next to the primary output)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("decompose", help="dyadic blocks of a scalar field")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--homogeneous", action="store_true")
    q.add_argument("--out-dir", required=True)
    q.set_defaults(func=cmd_decompose)

    q = sub.add_parser("norm", help="norm of a field file or vector directory")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--space", choices=("lp", "linf", "w1inf", "tl", "besov"), default="tl")
    q.add_argument("--s", type=float)
    q.add_argument("--p", type=float, default=1.0)
    q.add_argument("--q", type=float, default=math.inf)
    q.add_argument("--homogeneous", action="store_true")
    q.add_argument("--oversample", type=int, default=1)
    q.add_argument("--json")
    q.set_defaults(func=cmd_norm)

    q = sub.add_parser("project", help="Leray projection of a vector field")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_project)

    q = sub.add_parser("bony", help="paraproduct decomposition of fg")
    q.add_argument("--f", required=True)
    q.add_argument("--g", required=True)
    q.add_argument("--homogeneous", action="store_true")
    q.add_argument("--out-dir", required=True)
    q.set_defaults(func=cmd_bony)

    q = sub.add_parser("verify", help="randomised check of one estimate")
    q.add_argument("--id", required=True)
    q.add_argument("--n", type=int, default=64)
    q.add_argument("--d", type=int, default=2)
    q.add_argument("--L", type=float, default=1.0)
    q.add_argument("--trials", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--s", type=float)
    q.add_argument("--slope", type=float)
    q.add_argument("--bands", type=int, nargs=2, metavar=("J_LO", "J_HI"))
    q.add_argument("--amplitude", type=float, default=1.0)
    q.add_argument("--json", required=True)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("simulate", help="2D Euler run with norm diagnostics")
    src = q.add_mutually_exclusive_group()
    src.add_argument("--preset", default="taylor-green", choices=("taylor-green", "shear", "random-smooth", "vortex-pair"))
    src.add_argument("--init", help="scalar vorticity field file")
    q.add_argument("--n", type=int, default=128)
    q.add_argument("--L", type=float, default=1.0)
    q.add_argument("--dt", type=float, default=1e-3)
    q.add_argument("--t-end", type=float, default=1.0)
    q.add_argument("--s", type=float, default=3.0)
    q.add_argument("--C0", type=float)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--slope", type=float)
    q.add_argument("--monitor-period", type=int, default=10)
    q.add_argument("--no-dealias", action="store_true")
    q.add_argument("--csv")
    q.add_argument("--json")
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("report", help="consolidate JSON reports")
    q.add_argument("inputs", nargs="*")
    q.add_argument("--json")
    q.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="lp-euler: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    if args.threads < 1:
        log.error("--threads must be at least 1")
        return EXIT_VALIDATION
    manifest = RunManifest(command=args.command, argv=argv)
    t0 = time.perf_counter()
    try:
        with sfft.set_workers(args.threads):
            result = args.func(args, manifest)
    except (ValidationError, LPError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError, PermissionError) as exc:
        log.error("%s: %s", exc.strerror or "cannot open", exc.filename)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - reported, not hidden
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL
    outputs, code = result if isinstance(result, tuple) else (result, EXIT_OK)
    _finish_manifest(args, argv, manifest, outputs, t0)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
