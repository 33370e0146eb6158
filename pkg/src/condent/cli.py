"""Command-line batch runner.

Each subcommand reads an optional JSON config, merges command-line
overrides, runs deterministically and writes its tables (CSV or JSON) plus a
``manifest.json``. A manifest can be passed back as ``--config`` to replay
the run exactly.

Exit codes: 0 success, 1 internal error, 2 usage or config error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__, kernels, montecarlo as mc, verify
from .entanglement import measure_for_dims, measure_pure
from .errors import CapabilityError, ConfigError, CondentError, DomainError, UnboundedSupportError, ValidationError
from .model import (
    Dephasing,
    OUAmplitudeDamping,
    density_from_dict,
    system_from_dict,
)
from .oracle import DiscreteBath, evolve_total, oracle_husimi, oracle_scaling_check, project_coherent

OUTPUT_ENV = "CONDENT_OUTPUT_DIR"
EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("condent")


class Table:
    """Named, self-describing table: column names plus rows."""

    def __init__(self, name, columns, rows=None, units=None):
        self.name = name
        self.columns = list(columns)
        self.rows = [] if rows is None else rows
        self.units = units or {}

    def add(self, *values):
        self.rows.append([_plain(v) for v in values])

    def as_dict(self):
        return {"columns": self.columns, "units": self.units, "rows": self.rows}


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


# -- config helpers ----------------------------------------------------------


def _require(cfg, key, path=""):
    if key not in cfg:
        raise ConfigError([(f"{path}{key}", "missing")])
    return cfg[key]


def _float_list(cfg, key, default=None):
    val = cfg.get(key, default)
    if val is None:
        raise ConfigError([(key, "missing")])
    if isinstance(val, dict):
        try:
            return np.linspace(float(val["start"]), float(val["stop"]), int(val["num"])).tolist()
        except KeyError as exc:
            raise ConfigError([(f"{key}.{exc.args[0]}", "missing")]) from None
    try:
        return [float(v) for v in val]
    except (TypeError, ValueError):
        raise ConfigError([(key, "expected a list of numbers or {start, stop, num}")]) from None


def _sampler(cfg):
    try:
        return mc.SamplerConfig(
            int(cfg["samples"]), int(cfg["seed"]), int(cfg["workers"]), int(cfg.get("n_bins", 100)),
            None if cfg.get("x_range") is None else tuple(cfg["x_range"]),
        )
    except ValidationError as exc:
        raise ConfigError(exc.violations) from None


def _system(cfg):
    return system_from_dict(_require(cfg, "system"))


def _bath(cfg):
    b = _require(cfg, "bath")
    cutoff = int(b.get("fock_cutoff", 4))
    if "flat" in b:
        f = b["flat"]
        return DiscreteBath.flat(int(f["n_modes"]), float(f["window"]), float(f.get("level", 1 / (2 * math.pi))),
                                 cutoff)
    return DiscreteBath(_require(b, "couplings", "bath."), _require(b, "frequencies", "bath."), cutoff)


def _amplitudes(raw, path):
    arr = np.asarray(raw, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ConfigError([(path, "expected [re, im] pairs")])
    return arr[..., 0] + 1j * arr[..., 1]


def _outcomes(cfg, bath, rng_seed):
    if "outcomes" in cfg:
        return [_amplitudes(a, f"outcomes[{i}]") for i, a in enumerate(cfg["outcomes"])]
    n = int(cfg.get("n_random", 10))
    rng = np.random.default_rng(rng_seed)
    radius = float(cfg.get("radius", 1.0))
    return [radius * rng.uniform(0, 1, bath.n_modes) * np.exp(2j * math.pi * rng.uniform(size=bath.n_modes))
            for _ in range(n)]


# -- commands ----------------------------------------------------------------


def cmd_distribution(cfg):
    """MC and closed-form distributions of x on a p grid, plus support and mean curves."""
    spec = _system(cfg)
    ch = spec.channel
    if isinstance(ch, OUAmplitudeDamping):
        raise ConfigError([("system.channels[0].kind", "distribution needs a channel with a p(t) map")])
    rho = spec.rho_channel()
    scfg = _sampler(cfg)
    surface = Table("surface", ["p", "t", "x_lo", "x_hi", "x", "mc_density", "mc_stderr", "closed_form_density"])
    curves = Table("curves", ["p", "t", "x_max", "x_mean", "mc_mean", "mc_mean_stderr", "n_eff"])
    for p in _float_list(cfg, "p_grid"):
        if not 0 <= p < 1:
            raise ConfigError([("p_grid", f"values must lie in [0, 1), got {p}")])
        t = kernels.time_for_p(ch, p)
        try:
            top = mc.x_max(ch, rho, p)
        except UnboundedSupportError:
            top = math.nan
        hist = mc.entanglement_histogram(spec, t, scfg)
        widths = np.diff(hist.bin_edges)
        ref = (mc.closed_form_bin_masses(ch, rho, hist.bin_edges, p) / widths if 0 < p < 1
               else np.full(widths.size, math.nan))
        for i in range(widths.size):
            surface.add(p, t, hist.bin_edges[i], hist.bin_edges[i + 1], hist.centers[i], hist.density[i],
                        hist.mass_stderr[i] / widths[i], ref[i])
        curves.add(p, t, top, math.sqrt(1 - p), hist.mean, hist.mean_stderr, hist.n_eff)
    return [surface, curves], True


def cmd_mean(cfg):
    """log of the mean entanglement against Delta^2 t for dephasing spectral shapes."""
    delta = float(cfg.get("delta", 1.0))
    shapes = cfg.get("shapes", ["purely_ohmic", "superohmic"])
    omega_bar = _float_list(cfg, "omega_bar", [1.0])
    scaled = _float_list(cfg, "scaled_times")
    table = Table("mean", ["shape", "omega_bar", "delta2_t", "t", "log_mean"], units={"t": "1/Delta^2 scaled"})
    for shape in shapes:
        bars = [math.nan] if shape == "purely_ohmic" else omega_bar
        for wb in bars:
            dens = density_from_dict({"shape": shape, "omega_d": wb * delta**2}, f"shapes[{shape}]")
            try:
                ch = Dephasing(delta, dens)
                for s in scaled:
                    t = s / delta**2
                    table.add(shape, wb, s, t, math.log(mc.mean_entanglement(ch, t)))
            except CapabilityError as exc:
                raise ConfigError([("shapes", str(exc))]) from None
    return [table], True


def cmd_tau(cfg):
    """Disentanglement times over a mu grid."""
    gamma = float(cfg.get("gamma", 1.0))
    table = Table("tau", ["mu", "finite", "gamma_tau", "tau_sqrt_gamma_omega_d"])
    for mu in _float_list(cfg, "mu"):
        if mu <= 0:
            raise ConfigError([("mu", f"values must be positive, got {mu}")])
        wd = 2 * gamma / mu
        tau = kernels.disentanglement_time(gamma, wd)
        if tau is None:
            table.add(mu, False, None, None)
        else:
            table.add(mu, True, gamma * tau, tau * math.sqrt(gamma * wd))
    return [table], True


def cmd_verify(cfg):
    names = cfg.get("suites", list(verify.DEFAULT_SUITES))
    unknown = [n for n in names if n not in verify.SUITES]
    if unknown:
        raise ConfigError([("suites", f"unknown suites {unknown}; one of {sorted(verify.SUITES)}")])
    seed = int(cfg["seed"])
    rows = []
    for name in names:
        kwargs = {}
        if name == "scaling":
            kwargs = {"seed": seed, "n_instances": int(cfg.get("instances", 10)),
                      "f_scale": float(cfg.get("f_scale", 1.0))}
        elif name in ("distribution", "mean"):
            kwargs = {"seed": seed, "n_samples": int(cfg["samples"]), "n_workers": int(cfg["workers"])}
        elif name in ("universality", "invariance", "husimi"):
            kwargs = {"seed": seed}
        rows.extend(verify.SUITES[name](**kwargs))
    table = Table("verify", ["suite", "check", "residual", "tolerance", "passed", "detail"])
    for r in rows:
        table.add(r.suite, r.check, r.residual, r.tolerance, r.passed, r.detail)
        log.info("%s %-12s %-40s residual=%.3e tol=%.1e", "PASS" if r.passed else "FAIL",
                 r.suite, r.check, r.residual, r.tolerance)
    return [table], all(r.passed for r in rows)


def cmd_oracle(cfg):
    """Oracle evaluation of Born ratio, Husimi value and both scaling-law sides."""
    spec = _system(cfg)
    bath = _bath(cfg)
    t = float(_require(cfg, "t"))
    kind = measure_for_dims(spec.dims)
    total = evolve_total(spec, bath, t)
    cols = ["index"] + [f"a{k}_{c}" for k in range(bath.n_modes) for c in ("re", "im")]
    table = Table("oracle", cols + ["born_ratio", "husimi", "lhs", "rhs", "rel_residual"])
    for i, a in enumerate(_outcomes(cfg, bath, int(cfg["seed"]))):
        _, ratio = project_coherent(total, a)
        lhs, rhs = oracle_scaling_check(spec, bath, t, a, kind)
        parts = [v for z in a for v in (z.real, z.imag)]
        table.add(i, *parts, ratio, oracle_husimi(total, a), lhs, rhs, abs(lhs - rhs) / rhs)
    return [table], True


def cmd_tomography(cfg):
    """Predict x from Husimi values relative to one calibrated outcome."""
    spec = _system(cfg)
    bath = _bath(cfg)
    t = float(_require(cfg, "t"))
    kind = measure_for_dims(spec.dims)
    total = evolve_total(spec, bath, t)
    g0 = measure_pure(kind, spec.initial)

    def direct(a):
        rel, ratio = project_coherent(total, a)
        return measure_pure(kind, rel / math.sqrt(ratio)) / g0

    ref = _amplitudes(cfg.get("reference", [[0.0, 0.0]] * bath.n_modes), "reference")
    x_ref = direct(ref)
    q_ref = oracle_husimi(total, ref)
    n_ref = float(np.sum(np.abs(ref) ** 2))
    table = Table("tomography", ["index", "n_photons", "husimi", "x_direct", "x_predicted", "rel_error"])
    for i, a in enumerate(_outcomes(cfg, bath, int(cfg["seed"]))):
        n = float(np.sum(np.abs(a) ** 2))
        q = oracle_husimi(total, a)
        xd = direct(a)
        xp = mc.tomography_ratio(x_ref, q_ref, n_ref, q, n)
        table.add(i, n, q, xd, xp, abs(xp - xd) / xd)
    return [table], True


COMMANDS = {
    "distribution": (cmd_distribution, {"p_grid": [0.0, 0.25, 0.5, 0.75], "n_bins": 100}),
    "mean": (cmd_mean, {"scaled_times": {"start": 0.0, "stop": 10.0, "num": 51}}),
    "tau": (cmd_tau, {"mu": {"start": 1.0, "stop": 100.0, "num": 100}}),
    "verify": (cmd_verify, {}),
    "oracle": (cmd_oracle, {}),
    "tomography": (cmd_tomography, {}),
}
BASE_DEFAULTS = {"seed": 0, "samples": 100_000, "workers": 1}


# -- plumbing ----------------------------------------------------------------


def _load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([("--config", f"cannot read {path}: {exc.strerror}")]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)]) from None
    if not isinstance(data, dict):
        raise ConfigError([(str(path), "top level must be a JSON object")])
    return data


def resolve_config(command, args):
    cfg = dict(BASE_DEFAULTS)
    cfg.update(COMMANDS[command][1])
    if args.config:
        loaded = _load_config(args.config)
        if "resolved_config" in loaded:  # replaying a manifest
            if loaded.get("command") != command:
                raise ConfigError([("command", f"manifest was written by {loaded.get('command')!r}")])
            loaded = loaded["resolved_config"]
        cfg.update(loaded)
    for key in ("seed", "samples", "workers"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if command == "verify" and args.f_scale is not None:
        cfg["f_scale"] = args.f_scale
    if command == "verify" and args.suite:
        cfg["suites"] = args.suite
    return cfg


def _write_tables(tables, out_dir, fmt):
    written = {}
    if fmt == "json":
        path = out_dir / "result.json"
        path.write_text(json.dumps({t.name: t.as_dict() for t in tables}, indent=1, allow_nan=False) + "\n")
        written[path.name] = path
    else:
        for t in tables:
            path = out_dir / f"{t.name}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(t.columns)
                for row in t.rows:
                    w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
            written[path.name] = path
    return {name: hashlib.sha256(p.read_bytes()).hexdigest() for name, p in written.items()}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file, or a manifest.json to replay")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV}/<command> or ./condent-out/<command>)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="condent", description="Conditional entanglement studies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (fn, _) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).strip().splitlines()[0])
        if name == "verify":
            p.add_argument("--suite", action="append", choices=sorted(verify.SUITES))
            p.add_argument("--f-scale", type=float, help="multiply the scaling-law right side (fault injection)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args.command, args)
        base = os.environ.get(OUTPUT_ENV, "condent-out")
        out_dir = Path(args.out) if args.out else Path(base) / args.command
        out_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(out_dir, os.W_OK):
            raise ConfigError([("--out", f"{out_dir} is not writable")])
        tables, ok = COMMANDS[args.command][0](cfg)
        hashes = _write_tables(tables, out_dir, args.format)
    except (ValidationError, DomainError, CapabilityError) as exc:
        print(f"condent {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"condent {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CondentError, Exception) as exc:  # noqa: BLE001
        log.debug("internal failure", exc_info=True)
        print(f"condent {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    manifest = {
        "command": args.command,
        "format": args.format,
        "resolved_config": cfg,
        "outputs": hashes,
        "passed": ok,
        "versions": {"condent": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    print(out_dir)
    return EXIT_OK if ok else EXIT_VERIFY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
