"""Command-line entry point: ``mubtriple <command> ...``.

Exit codes: 0 success, 1 usage or I/O error, 2 an uncertainty bound was
violated (``ur`` only; the input is not a physical state).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_grid, certify, fit_gaussian, marginalize
from .entangle import check_global_ur, evaluate_criterion_from_state
from .errors import MubError
from .expsim import PLANES, ScanConfig, add_fluorescence_background, simulate_scan
from .fileio import (atomic_write_text, dumps_json, read_grid, read_state,
                     wavefunction_from_csv, wavefunction_to_csv, write_grid)
from .frft import frft, position_variance
from .gaussian import GaussianState
from .spdc import SpdcParams, spdc_state
from .uncertainty import check_all, g_sat_scan, minimize_g, triple_product

log = logging.getLogger("mubtriple")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2
PLANE_FILES = {"X": "plane_x1_x2", "U": "plane_r1_s2", "V": "plane_s1_r2"}
_SIGN_CHOICES = {"plus": "+", "minus": "-", "both": "both"}


class UsageError(MubError):
    pass


def _reject_unknown(block: dict, allowed, where: str) -> None:
    if not isinstance(block, dict):
        raise UsageError(f"{where} must be a JSON object")
    unknown = set(block) - set(allowed)
    if unknown:
        raise UsageError(f"unknown keys in {where}: {', '.join(sorted(unknown))}")


def load_config(path) -> dict:
    """Read a run config, checking schema version and top-level keys."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    _reject_unknown(doc, {"schema_version", "spdc", "scan", "fluorescence",
                          "seed", "planes", "format", "state"}, "config")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise UsageError(f"config schema_version must be {SCHEMA_VERSION}, got {version!r}")
    return doc


def _spdc_from(block) -> SpdcParams:
    _reject_unknown(block, {"sigma_plus", "sigma_minus"}, "spdc")
    try:
        return SpdcParams(block["sigma_plus"], block["sigma_minus"])
    except KeyError as exc:
        raise UsageError(f"spdc block is missing {exc}") from None


def _emit(doc, out=None) -> None:
    text = dumps_json(doc)
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


# -- ur -----------------------------------------------------------------

def _ur_reports(state: GaussianState) -> dict:
    doc = {"n_modes": state.n_modes, "physical": state.is_physical()}
    if state.n_modes == 1:
        reports = check_all(state)
        doc["triple_product"] = triple_product(state)
        doc["reports"] = [r.to_dict() for r in reports]
    elif state.n_modes == 2:
        reports = []
        for mode in (0, 1):
            for r in check_all(state.reduced(mode)):
                reports.append(replace(r, name=f"mode{mode + 1}.{r.name}"))
        reports += [check_global_ur(state, "+"), check_global_ur(state, "-")]
        doc["reports"] = [r.to_dict() for r in reports]
        doc["criterion"] = {
            s: evaluate_criterion_from_state(state, s).to_dict() for s in "-+"
        }
    else:
        raise UsageError("ur supports one- and two-mode states")
    doc["all_satisfied"] = all(r.satisfied for r in reports)
    return doc


def cmd_ur(args) -> int:
    if args.state:
        state = read_state(args.state)
    elif args.config:
        cfg = load_config(args.config)
        if "state" in cfg:
            state = GaussianState.from_dict(cfg["state"])
        elif "spdc" in cfg:
            state = spdc_state(_spdc_from(cfg["spdc"]))
        else:
            raise UsageError("config needs a 'state' or 'spdc' block")
    elif args.sigma_plus is not None and args.sigma_minus is not None:
        state = spdc_state(SpdcParams(args.sigma_plus, args.sigma_minus))
    else:
        raise UsageError("give a state file, --config, or --sigma-plus/--sigma-minus")
    doc = _ur_reports(state)
    _emit(doc, args.out)
    return EXIT_OK if doc["all_satisfied"] else EXIT_VIOLATION


# -- optimize -------------------------------------------------------------

def cmd_optimize(args) -> int:
    result = minimize_g(args.eta0)
    doc = {"result": result.to_dict()}
    if args.grid_scan:
        etas = np.round(np.linspace(0.1, 2.0, 39), 12)
        doc["grid_scan"] = g_sat_scan(etas)
    _emit(doc, args.out)
    return EXIT_OK if result.converged else EXIT_ERROR


# -- simulate -------------------------------------------------------------

def _parse_planes(text):
    if text is None:
        return None
    planes = [p.strip().upper() for p in text.split(",") if p.strip()]
    bad = [p for p in planes if p not in PLANES]
    if bad or not planes:
        raise UsageError(f"--planes takes a comma list of X, U, V; got {text!r}")
    return planes


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else {"schema_version": SCHEMA_VERSION}
    params = _spdc_from(cfg.get("spdc", {"sigma_plus": 35.0, "sigma_minus": 0.7}))
    try:
        scan = ScanConfig.from_dict(cfg.get("scan", {}))
    except MubError as exc:
        raise UsageError(f"scan block: {exc}") from None
    seed = args.seed if args.seed is not None else int(cfg.get("seed", scan.seed))
    planes = _parse_planes(args.planes) or cfg.get("planes", ["X", "U", "V"])
    fmt = args.format or cfg.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    fluor = cfg.get("fluorescence")
    if fluor is not None:
        _reject_unknown(fluor, {"rate_hz", "profile_width", "planes"}, "fluorescence")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for plane in planes:
        index = "XUV".index(plane)
        plane_cfg = replace(scan.for_plane(plane), seed=seed, stream=index)
        grid = simulate_scan(params, plane_cfg, workers=args.threads, plane=plane)
        if fluor and plane in fluor.get("planes", ["X"]):
            grid = add_fluorescence_background(
                grid, float(fluor["profile_width"]), float(fluor["rate_hz"]),
                seed=seed * 16 + index, dwell_time=plane_cfg.dwell_time,
                workers=args.threads)
        path = out / f"{PLANE_FILES[plane]}.{fmt}"
        write_grid(grid, path)
        written.append({"plane": plane, "path": str(path), "total_counts": grid.total})
        log.info("wrote %s (%d counts)", path, grid.total)
    _emit({"seed": seed, "spdc": {"sigma_plus": params.sigma_plus,
                                  "sigma_minus": params.sigma_minus},
           "files": written})
    return EXIT_OK


# -- analyze / certify ------------------------------------------------------

def _signs(choice):
    s = _SIGN_CHOICES[choice]
    return ("-", "+") if s == "both" else (s,)


def cmd_analyze(args) -> int:
    planes = []
    for path in args.grids:
        grid = read_grid(path)
        entry = {"file": str(path), "plane": grid.plane}
        for s in _signs(args.sign):
            hist = marginalize(grid, s)
            fit = fit_gaussian(hist)
            key = "minus" if s == "-" else "plus"
            entry[key] = {
                "fit": fit.to_dict(),
                "marginal": {
                    "w": hist.bin_centers.tolist(),
                    "counts": hist.counts.tolist(),
                    "errors": hist.errors.tolist(),
                    "fit_curve": fit.curve(hist.bin_centers).tolist(),
                },
            }
        if args.sign == "both":
            entry["table_row"] = analyze_grid(grid, grid.plane or None).to_dict()
        planes.append(entry)
    _emit({"planes": planes}, args.out)
    return EXIT_OK


def _summary(cert) -> str:
    def cell(v, e):
        return f"{v:.4g} +/- {e:.2g}"

    lines = [f"{'plane':<6}{'var(W-)':<22}{'var(W+)':<22}C_W"]
    for r in cert.rows:
        lines.append(f"{r.plane:<6}{cell(r.var_minus, r.var_minus_err):<22}"
                     f"{cell(r.var_plus, r.var_plus_err):<22}"
                     f"{cell(r.correlation, r.correlation_err)}")
    for sym, rep in cert.criteria.items():
        mark = "VIOLATED" if rep.entangled_verdict else "not violated"
        lines.append(
            f"product({sym}) = {rep.product:.4g} +/- {rep.product_uncertainty:.2g}"
            f"  bound 1: {mark}"
        )
    lines.append("verdict: " + ("entangled" if cert.entangled else "not detected"))
    return "\n".join(lines) + "\n"


def cmd_certify(args) -> int:
    if len(args.grids) != 3:
        raise UsageError("certify takes three grid files: X plane, U plane, V plane")
    grids = [read_grid(p) for p in args.grids]
    cert = certify(grids, _SIGN_CHOICES[args.sign])
    doc = cert.to_dict()
    doc["inputs"] = [str(p) for p in args.grids]
    _emit(doc, args.out)
    sys.stderr.write(_summary(cert))
    return EXIT_OK


# -- frft -----------------------------------------------------------------

def cmd_frft(args) -> int:
    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    psi = wavefunction_from_csv(text, normalize=args.normalize)
    out = frft(psi, args.theta)
    csv_text = wavefunction_to_csv(out)
    if args.out:
        atomic_write_text(args.out, csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.report_variance:
        line = json.dumps({"theta": args.theta,
                           "rotated_variance": position_variance(out)}) + "\n"
        (sys.stdout if args.out else sys.stderr).write(line)
    return EXIT_OK


def _angle(text: str) -> float:
    """Parse a float, also accepting expressions like '2pi/3' or 'pi/2'."""
    t = text.strip().lower().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    num, _, den = t.partition("/")
    scale = 1.0
    if num.endswith("pi"):
        num = num[:-2].rstrip("*")
        scale = math.pi
    try:
        value = (float(num) if num not in ("", "+", "-") else float(num + "1")) * scale
        return value / float(den) if den else value
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    """Bad arguments exit 1; exit 2 is reserved for bound violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="mubtriple",
        description="Uncertainty relations and entanglement tests with three "
                    "mutually unbiased quadratures.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ur", help="check uncertainty relations of a Gaussian state")
    p.add_argument("state", nargs="?", help="state JSON {n_modes, mean, cov}")
    p.add_argument("--config", help="run config with a 'state' or 'spdc' block")
    p.add_argument("--sigma-plus", type=float)
    p.add_argument("--sigma-minus", type=float)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_ur)

    p = sub.add_parser("optimize", help="minimise the triple-product bound")
    p.add_argument("--eta0", type=float, default=1.0, help="starting x-variance")
    p.add_argument("--grid-scan", action="store_true",
                   help="also tabulate g on the Heisenberg boundary")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="simulate slit-scan coincidence grids")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--planes", help="comma list of X, U, V (default all)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="fit marginals of coincidence grids")
    p.add_argument("grids", nargs="+")
    p.add_argument("--sign", choices=tuple(_SIGN_CHOICES), default="both")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", help="three-plane entanglement test")
    p.add_argument("grids", nargs="+", help="X, U and V plane grids, in order")
    p.add_argument("--sign", choices=tuple(_SIGN_CHOICES), default="both")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("frft", help="fractional Fourier transform of a wavefunction CSV")
    p.add_argument("input")
    p.add_argument("--theta", type=_angle, required=True,
                   help="rotation angle in radians (accepts e.g. 2pi/3)")
    p.add_argument("--out")
    p.add_argument("--normalize", action="store_true",
                   help="renormalise the input before transforming")
    p.add_argument("--report-variance", action="store_true")
    p.set_defaults(func=cmd_frft)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MubError, OSError) as exc:
        msg = exc.strerror if isinstance(exc, OSError) and exc.strerror else str(exc)
        name = getattr(exc, "filename", None)
        sys.stderr.write(f"mubtriple {args.command}: error: "
                         f"{name + ': ' if name else ''}{msg}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
