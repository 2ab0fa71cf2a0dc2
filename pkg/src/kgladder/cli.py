"""Command-line front end.

Subcommands: ``spectrum``, ``ladder-check``, ``evolve``, ``compare``,
``temperature``.  Exit codes: 0 success, 1 usage or configuration error,
2 physics-domain error (e.g. alpha <= 1/4), 3 numerical failure.

Settings come from command-line flags, then a ``--config`` file of
``key = value`` lines (``#`` starts a comment), then built-in defaults.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Dict, List, Optional

from . import __version__
from .errors import DegenerateFit, DomainError, Instability, NumericalError
from .model import ComplexEnergy, ModelParams, coupling_from, effective_temperature
from .spectrum import (
    FAR_FIELDS,
    MatchingProblem,
    ResonanceEntry,
    consecutive_ratios,
    find_ladder,
    fit_ladder,
    width_ladder,
)
from .timedomain import (
    INNER_BCS,
    Grid,
    Pulse,
    compare_spectra,
    evolve,
    extract_modes,
    read_timeseries_csv,
    write_timeseries_csv,
)

SPECTRUM_COLUMNS = ["n", "re_E", "im_E", "gamma_n", "abs_E_r0", "residual"]


class ConfigError(Exception):
    """Usage or configuration problem (exit code 1)."""


def _complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


# name -> (parser, default); None default means "required when used"
KNOBS: Dict[str, tuple] = {
    "gamma": (float, None),
    "ell": (int, 0),
    "r0": (float, 1.0),
    "count": (int, 5),
    "window_uv": (float, 0.5),
    "reflection": (_complex, None),
    "far_field": (str, "decaying"),
    "out": (str, None),
    "format": (str, "json"),
    "spectrum": (str, None),
    "series": (str, None),
    # time domain
    "points": (int, 8000),
    "R": (float, 200.0),
    "courant": (float, 0.5),
    "t_final": (float, 150.0),
    "probe": (float, 5.0),
    "pulse_center": (float, 10.0),
    "pulse_width": (float, 1.5),
    "inner_bc": (str, "characteristic"),
    "window_start": (float, None),
    "window_end": (float, None),
    "max_modes": (int, 6),
}
CHOICES = {"format": ("json", "csv"), "far_field": FAR_FIELDS, "inner_bc": INNER_BCS}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kgladder", description="Resonance ladder of the absorbing inverse-square problem.")
    p.add_argument("--version", action="version", version=f"kgladder {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    def common(sp):
        sp.add_argument("--gamma", type=float, default=S, help="coupling gamma")
        sp.add_argument("--ell", type=int, default=S, help="angular momentum (default 0)")
        sp.add_argument("--r0", type=float, default=S, help="matching radius (default 1)")
        sp.add_argument("--count", type=int, default=S, help="number of rungs (default 5)")
        sp.add_argument("--window-uv", dest="window_uv", type=float, default=S,
                        help="largest |E| r0 in the ladder (default 0.5)")
        sp.add_argument("--reflection", type=_complex, default=S,
                        help="absorber reflection amplitude (default exp(-pi sigma/2))")
        sp.add_argument("--far-field", dest="far_field", choices=FAR_FIELDS, default=S)
        sp.add_argument("--out", default=S, help="output directory (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default=S)
        sp.add_argument("--config", default=None, help="key = value file")
        return sp

    common(sub.add_parser("spectrum", help="find the resonance ladder"))
    lc = common(sub.add_parser("ladder-check", help="geometric fit of a ladder"))
    lc.add_argument("--spectrum", default=S, help="spectrum file to check instead of solving")
    tp = common(sub.add_parser("temperature", help="effective temperature of the ladder"))
    tp.add_argument("--spectrum", default=S)

    def timeflags(sp):
        sp.add_argument("--points", type=int, default=S)
        sp.add_argument("--R", type=float, default=S)
        sp.add_argument("--courant", type=float, default=S)
        sp.add_argument("--t-final", dest="t_final", type=float, default=S)
        sp.add_argument("--probe", type=float, default=S)
        sp.add_argument("--pulse-center", dest="pulse_center", type=float, default=S)
        sp.add_argument("--pulse-width", dest="pulse_width", type=float, default=S)
        sp.add_argument("--inner-bc", dest="inner_bc", choices=INNER_BCS, default=S)
        sp.add_argument("--window-start", dest="window_start", type=float, default=S)
        sp.add_argument("--window-end", dest="window_end", type=float, default=S)
        sp.add_argument("--max-modes", dest="max_modes", type=int, default=S)
        sp.add_argument("--spectrum", default=S)

    timeflags(common(sub.add_parser("evolve", help="time evolution and ringdown fit")))
    cp = common(sub.add_parser("compare", help="fit a stored probe series against the ladder"))
    timeflags(cp)
    cp.add_argument("--series", default=S, help="probe CSV written by evolve")
    return p


def read_config(path: str) -> Dict[str, object]:
    """Parse ``key = value`` lines; raises ConfigError with line diagnostics."""
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key not in KNOBS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                value = KNOBS[key][0](val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {val!r}") from exc
            if key in CHOICES and value not in CHOICES[key]:
                raise ConfigError(f"{path}:{lineno}: {key} must be one of {CHOICES[key]}")
            out[key] = value
    return out


def resolve(args: argparse.Namespace) -> Dict[str, object]:
    """Merge defaults < config file < command line."""
    cfg = {k: d for k, (_, d) in KNOBS.items()}
    if args.config:
        cfg.update(read_config(args.config))
    for k, v in vars(args).items():
        if k in KNOBS:
            cfg[k] = v
    cfg["command"] = args.command
    return cfg


def _problem(cfg) -> MatchingProblem:
    if cfg["gamma"] is None:
        raise ConfigError("gamma is required (--gamma or 'gamma = ...' in the config)")
    params = ModelParams(gamma=cfg["gamma"], ell=cfg["ell"], r0=cfg["r0"])
    c = coupling_from(params)
    return MatchingProblem(c, r0=params.r0, reflection=cfg["reflection"],
                           far_field=cfg["far_field"], window_uv=cfg["window_uv"])


def _metadata(cfg, p: Optional[MatchingProblem]) -> Dict[str, object]:
    meta = {"tool": "kgladder", "version": __version__, "command": cfg["command"]}
    keys = ("gamma", "ell", "r0", "count", "window_uv", "far_field")
    meta.update({k: cfg[k] for k in keys})
    if p is not None:
        meta["alpha"] = p.coupling.alpha
        meta["sigma"] = p.sigma
        meta["reflection_re"] = p.rho.real
        meta["reflection_im"] = p.rho.imag
    return meta


def _spectrum_rows(entries: List[ResonanceEntry], r0: float):
    return [
        {
            "n": e.n,
            "re_E": e.E.real,
            "im_E": e.E.imag,
            "gamma_n": e.energy.width,
            "abs_E_r0": abs(e.E) * r0,
            "residual": e.determinant_residual,
        }
        for e in entries
    ]


def write_spectrum(fh, rows, meta, fmt: str):
    if fmt == "json":
        json.dump({"metadata": meta, "columns": SPECTRUM_COLUMNS, "resonances": rows}, fh, indent=2)
        fh.write("\n")
        return
    for k, v in meta.items():
        fh.write(f"# {k} = {v!r}\n" if isinstance(v, float) else f"# {k} = {v}\n")
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(SPECTRUM_COLUMNS)
    for row in rows:
        wr.writerow([row["n"]] + [repr(float(row[c])) for c in SPECTRUM_COLUMNS[1:]])


def read_spectrum(path: str):
    """Read a spectrum file (JSON or CSV) -> (entries, metadata)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        meta, rows = data.get("metadata", {}), data["resonances"]
    else:
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                meta[k.strip()] = v.strip()
            elif line.strip():
                body.append(line)
        reader = csv.DictReader(body)
        rows = [{k: (int(v) if k == "n" else float(v)) for k, v in r.items()} for r in reader]
    entries = [
        ResonanceEntry(n=int(r["n"]), energy=ComplexEnergy(complex(r["re_E"], r["im_E"])),
                       determinant_residual=float(r["residual"]))
        for r in rows
    ]
    return entries, meta


def _emit(cfg, name: str, writer):
    """Call ``writer(fh)`` on stdout or on ``<out>/<name>``."""
    if cfg["out"] is None:
        writer(sys.stdout)
        return None
    os.makedirs(cfg["out"], exist_ok=True)
    path = os.path.join(cfg["out"], name)
    with open(path, "w", newline="") as fh:
        writer(fh)
    return path


def _ladder(cfg):
    if cfg.get("spectrum"):
        entries, meta = read_spectrum(cfg["spectrum"])
        # model parameters not given explicitly come from the file header
        for key in ("gamma", "ell", "r0"):
            if key in meta and (cfg[key] is None or cfg[key] == KNOBS[key][1]):
                cfg[key] = KNOBS[key][0](meta[key])
        p = _problem(cfg)
    else:
        p = _problem(cfg)
        entries = find_ladder(p, cfg["count"])
    return p, entries


def run_spectrum(cfg) -> int:
    p = _problem(cfg)
    entries = find_ladder(p, cfg["count"])
    rows = _spectrum_rows(entries, p.r0)
    meta = _metadata(cfg, p)
    ext = cfg["format"]
    path = _emit(cfg, f"spectrum.{ext}", lambda fh: write_spectrum(fh, rows, meta, ext))
    if path:
        print(path)
    return 0


def ladder_report(entries, p: MatchingProblem) -> Dict[str, object]:
    c = p.coupling
    fit = fit_ladder(entries, c)
    predicted = math.exp(-math.pi / p.sigma)
    mags = [abs(e.E) for e in entries]
    widths = width_ladder(entries)
    step_dev = [abs(q / predicted - 1) for q in consecutive_ratios(mags)]
    width_dev = [abs(q / predicted - 1) for q in consecutive_ratios(widths)]
    return {
        "fitted_ratio": fit.ratio,
        "predicted_ratio": predicted,
        "deviation": abs(fit.ratio / predicted - 1),
        "max_step_deviation": max(step_dev),
        "max_width_step_deviation": max(width_dev),
        "log_slope": fit.log_slope,
        "phase_drift": fit.phase_drift,
        "residual_rms": fit.residual_rms,
        "E0": {"re": fit.E0.real, "im": fit.E0.imag},
        "T_eff": fit.T_eff,
        "width_slope": fit.width_slope,
        "width_intercept": fit.width_intercept,
        "ln_2_abs_E0": math.log(2 * abs(fit.E0)),
    }


def run_ladder_check(cfg) -> int:
    p, entries = _ladder(cfg)
    rep = ladder_report(entries, p)
    rep["metadata"] = _metadata(cfg, p)
    _emit(cfg, "ladder_check.json", lambda fh: (json.dump(rep, fh, indent=2), fh.write("\n")))

    def plot(fh):
        fh.write("# ln Gamma_n against n with the fitted line\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["n", "ln_gamma_n", "fit"])
        for e, g in zip(entries, width_ladder(entries)):
            line = rep["width_intercept"] + rep["width_slope"] * e.n
            wr.writerow([e.n, repr(math.log(g)) if g > 0 else "nan", repr(line)])

    if cfg["out"] is not None:
        _emit(cfg, "ladder_plot.csv", plot)
    return 0


def run_temperature(cfg) -> int:
    p, entries = _ladder(cfg)
    E0 = next((e.E for e in entries if e.n == 0), entries[0].E)
    rep = {
        "T_eff": effective_temperature(E0, p.sigma),
        "E0": {"re": E0.real, "im": E0.imag},
        "sigma": p.sigma,
        "metadata": _metadata(cfg, p),
    }
    _emit(cfg, "temperature.json", lambda fh: (json.dump(rep, fh, indent=2), fh.write("\n")))
    return 0


def _grid(cfg, r0):
    return Grid(r0=r0, R=cfg["R"], points=cfg["points"], courant=cfg["courant"])


def _window(cfg):
    t0 = cfg["window_start"] if cfg["window_start"] is not None else 0.3 * cfg["t_final"]
    t1 = cfg["window_end"] if cfg["window_end"] is not None else 0.95 * cfg["t_final"]
    return t0, t1


def mode_report(modes, entries) -> Dict[str, object]:
    cmp = compare_spectra(modes, entries)
    return {
        "frequencies": [
            {"re": f.real, "im": f.imag, "amplitude_re": a.real, "amplitude_im": a.imag}
            for f, a in zip(modes.frequencies, modes.amplitudes)
        ],
        "fit_residual": modes.fit_residual,
        "pairing": [{"n": q.n, "distance_rel": q.distance_rel} for q in cmp.pairs],
        "growing": [{"re": f.real, "im": f.imag} for f in modes.growing],
        "unstable": [{"re": f.real, "im": f.imag} for f in modes.unstable],
        "n0_distance_rel": next((q.distance_rel for q in cmp.pairs if q.n == 0), None),
    }


def _fit_and_report(cfg, series, p, entries, meta):
    modes = extract_modes(series, _window(cfg), cfg["max_modes"])
    if not modes.frequencies:
        raise NumericalError(
            f"no stable decaying mode in the fit window; growing modes {modes.growing}"
        )
    rep = mode_report(modes, entries)
    rep["metadata"] = meta
    _emit(cfg, "modes.json", lambda fh: (json.dump(rep, fh, indent=2), fh.write("\n")))
    return 0


def run_evolve(cfg) -> int:
    p, entries = _ladder(cfg)
    grid = _grid(cfg, p.r0)
    pulse = Pulse(center=cfg["pulse_center"], width=cfg["pulse_width"])
    beta = p.beta if cfg["inner_bc"] == "robin" else None
    series = evolve(grid, p.coupling, pulse, beta=beta, t_final=cfg["t_final"],
                    probe_r=cfg["probe"], inner_bc=cfg["inner_bc"])
    meta = _metadata(cfg, p)
    meta.update({k: cfg[k] for k in ("points", "R", "courant", "t_final", "probe", "inner_bc")})
    if cfg["out"] is not None:
        _emit(cfg, "probe.csv", lambda fh: write_timeseries_csv(fh, series, meta))
    return _fit_and_report(cfg, series, p, entries, meta)


def run_compare(cfg) -> int:
    if not cfg.get("series"):
        raise ConfigError("compare needs --series <probe.csv>")
    p, entries = _ladder(cfg)
    series = read_timeseries_csv(cfg["series"])
    return _fit_and_report(cfg, series, p, entries, _metadata(cfg, p))


COMMANDS = {
    "spectrum": run_spectrum,
    "ladder-check": run_ladder_check,
    "temperature": run_temperature,
    "evolve": run_evolve,
    "compare": run_compare,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        return COMMANDS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Instability as exc:
        print(f"numerical error: {exc} (onset t = {exc.onset_time})", file=sys.stderr)
        return 3
    except (DomainError, DegenerateFit) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
