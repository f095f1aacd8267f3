"""Command-line front end: experiment orchestration, run persistence, and
report emission.

Every run writes its outputs (JSON, CSV) plus a manifest into a directory
named by a digest of the canonical config, so identical configs land in the
same place and reruns are byte-identical.  Exit codes: 0 success, 2 config or
validation error, 3 computation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

try:
    import tomllib  # py 3.11+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .capselect import SelectConfig, bg_select
from .decnum.exponents import DescentState, descent_iterate, lower_bound_exponent
from .decnum.families import (
    example_family_modulated,
    example_family_rescaled,
)
from .decnum.fitting import fit_exponent
from .decnum.ratios import dec_ratio, muldec_lhs
from .hypotheses import CheckConfig, check_hyperplane_rank, check_nondegeneracy, codim1_shortcut
from .polyalg import MultiPoly, poly_norm1
from .quadforms import Cap, QuadTuple, load_forms
from .transversality import (
    BLDatum,
    Subspace,
    TransvConfig,
    bl_constant_gaussian,
    nu_transverse,
)
from .varieties import scale_ladder, sublevel_decompose, variety_cube_cover, verify_sublevel_inclusion


class ConfigError(Exception):
    pass


class ComputationError(Exception):
    pass


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode()


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _load_poly(path: str) -> MultiPoly:
    try:
        with open(path) as fh:
            return MultiPoly.from_json_obj(json.load(fh))
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"cannot read polynomial from {path}: {e}")


def _load_forms(spec: str) -> QuadTuple:
    try:
        return load_forms(spec)
    except Exception as e:
        raise ConfigError(f"cannot load forms {spec!r}: {e}")


def _parse_delta(s: str) -> Fraction:
    f = Fraction(s)
    if f <= 0 or f > 1 or (f.denominator & (f.denominator - 1)) or f.numerator != 1:
        raise ConfigError(f"delta must be a dyadic 1/2^k, got {s}")
    return f


class RunWriter:
    """Collects output files and writes the run manifest."""

    def __init__(self, out_root: str, config: Dict):
        self.config = config
        canonical = _json_bytes(config)
        self.run_id = _digest(canonical)[:12]
        self.dir = Path(out_root) / f"{config['command']}-{self.run_id}"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs: Dict[str, Dict] = {}
        self.t0 = time.time()

    def write_json(self, name: str, obj) -> None:
        data = _json_bytes(obj)
        (self.dir / name).write_bytes(data)
        self.outputs[name] = {"path": str(self.dir / name), "sha256": _digest(data)}

    def write_csv(self, name: str, header: List[str], rows: List[List]) -> None:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
        data = ("\n".join(lines) + "\n").encode()
        (self.dir / name).write_bytes(data)
        self.outputs[name] = {"path": str(self.dir / name), "sha256": _digest(data)}

    def finish(self) -> Path:
        manifest = {
            "config": self.config,
            "version": __version__,
            "wall_time_s": time.time() - self.t0,
            "threads": os.environ.get("QSDEC_THREADS", ""),
            "outputs": self.outputs,
        }
        (self.dir / "manifest.json").write_bytes(_json_bytes(manifest))
        return self.dir


def _family(kind: str, T: QuadTuple, delta: Fraction):
    if kind == "modulated":
        return example_family_modulated(T, delta)
    if kind == "rescaled":
        return example_family_rescaled(T, delta)
    raise ConfigError(f"unknown family {kind!r} (expected modulated or rescaled)")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check_hypotheses(args, config) -> RunWriter:
    T = _load_forms(args.forms)
    cfg = CheckConfig(seed=args.seed, samples=args.samples)
    w = RunWriter(args.out, config)
    r1 = check_nondegeneracy(T, cfg)
    r2 = check_hyperplane_rank(T, cfg)
    w.write_json(
        "result.json",
        {
            "forms": T.to_json_obj(),
            "codim1_shortcut": codim1_shortcut(T),
            "nondegeneracy": r1.to_json_obj(),
            "hyperplane_rank": r2.to_json_obj(),
        },
    )
    return w


def cmd_transversality(args, config) -> RunWriter:
    T = _load_forms(args.forms)
    from .quadforms import caps_partition

    part = caps_partition(Fraction(1, args.caps), T.d)
    try:
        caps = [part[i] for i in args.tuple]
    except IndexError:
        raise ConfigError(f"cap index out of range for K = {args.caps}")
    cfg = TransvConfig(seed=args.seed, tuple_samples=args.samples)
    rep = nu_transverse(T, caps, cfg)
    w = RunWriter(args.out, config)
    w.write_json("result.json", rep.to_json_obj())
    return w


def cmd_bl_constant(args, config) -> RunWriter:
    try:
        with open(args.subspaces) as fh:
            obj = json.load(fh)
        bases = [np.array(v, dtype=float) for v in obj["subspaces"]]
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"cannot read subspaces: {e}")
    datum = BLDatum.from_bases([b.T if b.shape[0] < b.shape[1] else b for b in bases])
    res = bl_constant_gaussian(datum)
    w = RunWriter(args.out, config)
    w.write_json("result.json", res.to_json_obj())
    return w


def cmd_cap_select(args, config) -> RunWriter:
    T = _load_forms(args.forms)
    try:
        with open(args.norms) as fh:
            obj = json.load(fh)
        norms = {}
        for anchor, val in obj["norms"]:
            norms[Cap(tuple(Fraction(a) for a in anchor), Fraction(1, args.K))] = float(val)
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"cannot read norms: {e}")
    cfg = SelectConfig(seed=args.seed, A=args.A)
    out = bg_select(T, norms, args.K, cfg)
    w = RunWriter(args.out, config)
    w.write_json("result.json", out.to_json_obj())
    return w


def cmd_variety_cover(args, config) -> RunWriter:
    P = _load_poly(args.poly)
    cover = variety_cube_cover(P, args.K, args.A, P.nvars, mode=args.mode)
    w = RunWriter(args.out, config)
    w.write_json("result.json", cover.to_json_obj())
    return w


def cmd_sublevel(args, config) -> RunWriter:
    P = _load_poly(args.poly)
    nrm = poly_norm1(P)
    if nrm == 0:
        raise ConfigError("zero polynomial")
    Pn = P.scale(1 / nrm)
    D = max(Pn.degree(), 1)
    ladder = scale_ladder(args.K, args.A, D)
    cert = sublevel_decompose(Pn, ladder)
    out = {"ladder": ladder.to_json_obj(), "certificate": cert.to_json_obj()}
    if args.verify:
        if args.seed is None:
            raise ConfigError("--seed is required with --verify")
        out["verification"] = verify_sublevel_inclusion(Pn, cert, ladder, args.verify, args.seed)
    w = RunWriter(args.out, config)
    w.write_json("result.json", out)
    return w


def cmd_dec_estimate(args, config) -> RunWriter:
    T = _load_forms(args.forms)
    delta = _parse_delta(args.delta)
    fam = _family(args.family, T, delta)
    rep = dec_ratio(fam, args.p, q=args.q, method=args.method)
    w = RunWriter(args.out, config)
    w.write_json("result.json", rep)
    return w


def cmd_muldec_lhs(args, config) -> RunWriter:
    T = _load_forms(args.forms)
    fam = _family(args.family, T, Fraction(1, args.K))
    rep = muldec_lhs(fam, args.caps, args.K, args.p)
    w = RunWriter(args.out, config)
    w.write_json("result.json", rep)
    return w


def cmd_sharpness(args, config) -> RunWriter:
    T = _load_forms(args.forms)
    if args.dmin > args.dmax:
        raise ConfigError("dmin must not exceed dmax")
    table = {}
    rows = []
    for k in range(args.dmin, args.dmax + 1):
        delta = Fraction(1, 2**k)
        fam = _family(args.family, T, delta)
        rep = dec_ratio(fam, args.p, q=args.q)
        table[str(delta)] = rep["ratio"]
        rows.append([str(delta), rep["ratio"]])
    fit = fit_exponent(table)
    target = lower_bound_exponent(T.d, T.n, args.p, args.q)
    w = RunWriter(args.out, config)
    w.write_csv("series.csv", ["delta", "ratio"], rows)
    w.write_json(
        "result.json",
        {
            "fit": fit.to_json_obj(),
            "lower_bound_exponent": str(target),
            "gap": fit.slope - float(target),
            "family": args.family,
            "p": args.p,
            "q": args.q,
        },
    )
    return w


def cmd_exponent_descent(args, config) -> RunWriter:
    try:
        state = DescentState.standard(args.d, args.n, Fraction(args.p), Fraction(args.eta0),
                                      Fraction(args.Lambda) if args.Lambda else None)
    except ValueError as e:
        raise ConfigError(str(e))
    seq = descent_iterate(state, args.steps)
    w = RunWriter(args.out, config)
    w.write_csv("series.csv", ["step", "eta", "eta_float"],
                [[i, str(v), float(v)] for i, v in enumerate(seq)])
    w.write_json(
        "result.json",
        {
            "d": args.d, "n": args.n, "p": args.p,
            "Lambda": str(state.Lambda),
            "eta_final": str(seq[-1]),
            "steps": len(seq) - 1,
        },
    )
    return w


def cmd_report(args, config) -> RunWriter:
    records = []
    for rdir in args.runs:
        mpath = Path(rdir) / "manifest.json"
        if not mpath.exists():
            raise ConfigError(f"no manifest in {rdir}")
        records.append(json.loads(mpath.read_text()))
    if not records:
        raise ConfigError("need at least one run directory")
    w = RunWriter(args.out, config)
    rows = []
    lines = []
    series_rows = []
    for rec in records:
        cmd = rec["config"]["command"]
        rdir = Path(rec["outputs"].get("result.json", {}).get("path", "")).parent
        run_id = rdir.name
        status = "OK"
        slope = target = gap = ""
        if cmd == "sharpness":
            try:
                res = json.loads((rdir / "result.json").read_text())
                slope = res["fit"]["slope"]
                target = res["lower_bound_exponent"]
                gap = res["gap"]
                if not res["fit"]["table"]:
                    status = "INCOMPLETE"
                for delta, ratio in res["fit"]["table"]:
                    series_rows.append([run_id, delta, ratio])
            except (OSError, KeyError):
                status = "INCOMPLETE"
        rows.append([cmd, rec["config"].get("seed", ""), slope, target, gap, status])
        lines.append(f"{cmd:18s} slope={slope} target={target} gap={gap} [{status}]")
    w.write_csv("summary.csv", ["command", "seed", "slope", "target", "gap", "status"], rows)
    if series_rows:
        w.write_csv("series.csv", ["run", "delta", "ratio"], series_rows)
    w.write_json("summary.json", {"rows": rows})
    sys.stdout.write("\n".join(lines) + "\n")
    return w


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsdec", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed_required: bool):
        p.add_argument("--out", default="runs", help="output root directory")
        p.add_argument("--config", default=None, help="TOML config file with defaults")
        p.add_argument("--seed", type=int, required=seed_required,
                       default=None if seed_required else None)

    p = sub.add_parser("check-hypotheses", help="decide the non-degeneracy hypotheses")
    p.add_argument("--forms", required=True)
    p.add_argument("--samples", type=int, default=2048)
    common(p, True)
    p.set_defaults(func=cmd_check_hypotheses)

    p = sub.add_parser("transversality", help="nu-transversality of a cap tuple")
    p.add_argument("--forms", required=True)
    p.add_argument("--caps", type=int, required=True, help="scale parameter K")
    p.add_argument("--tuple", type=int, nargs="+", required=True)
    p.add_argument("--samples", type=int, default=4)
    common(p, True)
    p.set_defaults(func=cmd_transversality)

    p = sub.add_parser("bl-constant", help="Gaussian Brascamp-Lieb constant")
    p.add_argument("--subspaces", required=True)
    common(p, False)
    p.set_defaults(func=cmd_bl_constant)

    p = sub.add_parser("cap-select", help="transverse-or-concentrated selection")
    p.add_argument("--forms", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--norms", required=True)
    p.add_argument("--A", type=int, default=2)
    common(p, True)
    p.set_defaults(func=cmd_cap_select)

    p = sub.add_parser("variety-cover", help="dyadic cube cover of a zero set")
    p.add_argument("--poly", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--A", type=int, default=2)
    p.add_argument("--mode", choices=["lemma", "corollary"], default="corollary")
    common(p, False)
    p.set_defaults(func=cmd_variety_cover)

    p = sub.add_parser("sublevel", help="sublevel decomposition certificate")
    p.add_argument("--poly", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--A", type=int, default=2)
    p.add_argument("--verify", type=int, default=0, help="verification sample count")
    common(p, False)
    p.set_defaults(func=cmd_sublevel)

    p = sub.add_parser("dec-estimate", help="decoupling ratio at one scale")
    p.add_argument("--forms", required=True)
    p.add_argument("--delta", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--family", default="modulated")
    p.add_argument("--method", default="auto")
    common(p, False)
    p.set_defaults(func=cmd_dec_estimate)

    p = sub.add_parser("muldec-lhs", help="multilinear decoupling left-hand side")
    p.add_argument("--forms", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--caps", type=int, nargs="+", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--family", default="rescaled")
    common(p, False)
    p.set_defaults(func=cmd_muldec_lhs)

    p = sub.add_parser("sharpness", help="lower-bound exponent experiment")
    p.add_argument("--forms", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--dmin", type=int, required=True, help="smallest -log2(delta)")
    p.add_argument("--dmax", type=int, required=True, help="largest -log2(delta)")
    common(p, False)
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("exponent-descent", help="the eta descent recursion")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--eta0", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--Lambda", default=None)
    common(p, False)
    p.set_defaults(func=cmd_exponent_descent)

    p = sub.add_parser("report", help="aggregate run records into one table")
    p.add_argument("--runs", nargs="+", required=True)
    common(p, False)
    p.set_defaults(func=cmd_report)

    return ap


def _apply_toml(args, argv) -> None:
    """TOML values fill in anything not given explicitly on the command line."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config {args.config}: {e}")
    explicit = {tok.split("=")[0].lstrip("-").replace("-", "_")
                for tok in argv if tok.startswith("--")}
    for key, val in data.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in explicit:
            setattr(args, attr, val)


def _config_snapshot(args) -> Dict:
    skip = {"func", "config", "out"}
    snap = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    snap = {k: v for k, v in snap.items() if v is not None}
    return snap


def main(argv: Optional[List[str]] = None) -> int:
    ap = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = ap.parse_args(argv)
    try:
        _apply_toml(args, argv)
        config = _config_snapshot(args)
        writer = args.func(args, config)
        run_dir = writer.finish()
        sys.stdout.write(f"run written to {run_dir}\n")
        return 0
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 2
    except (ValueError, KeyError, OSError) as e:
        sys.stderr.write(f"validation error: {e}\n")
        return 2
    except Exception as e:  # computation failures
        sys.stderr.write(f"computation error: {type(e).__name__}: {e}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
