"""Batch command-line front end.

One command per process: parse flags (optionally seeded from a flat
key=value config file, flags win), dispatch to the library, print a short
human summary, and write machine output only when --output is given. A
manifest with the config echo, library versions, and wall time is written
next to each output file; result files themselves contain no timing, so a
rerun of the same config is byte-identical.

Exit codes: 0 success, 1 invalid input, 2 solver-budget degradation
(results still written, flagged).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .capacity import CapacityResult, capacity, choquet_integral, f_norm, lq_cap_norm
from .families import DEFAULT_FAMILY_SEED
from .grid import (Field, Grid, Mask, Params, annulus_mask, ball_mask, cube_mask,
                   field_from_json, field_to_json, mask_from_json)
from .potentials import Measure, bessel_potential, riesz_potential, wolff_potential
from .spaces import (beta_functional, kv_norm, lambda_functional, m_norm, n_norm,
                     otilde_norm)
from .verify import refinement_study, report_to_csv, report_to_json, run_check

__all__ = ["RunConfig", "run", "main"]

_COMMANDS = ("capacity", "potential", "wolff", "choquet", "norm", "verify", "report")


@dataclass
class RunConfig:
    command: str
    n: int = 1
    alpha: float = 0.4
    s: float = 2.0
    q: float | None = None
    p: float | None = None
    r: float | None = None
    N: int = 64
    L: float = 1.0
    kind: str = "riesz"
    tol: float = 1e-6
    seed: int = DEFAULT_FAMILY_SEED
    levels: int = 48
    threads: int = 0
    output: str | None = None
    check: str | None = None
    family: str = "mixed"
    count: int = 8
    set_spec: str | None = None
    input: str | None = None
    t: float = 2.0
    norm: str | None = None
    method: str = "fast"
    R: float | None = None
    atoms: str | None = None
    extremal_out: str | None = None
    refine: str | None = None

    def params(self) -> Params:
        return Params(self.n, self.alpha, self.s, self.q, self.p, self.r)

    def grid(self) -> Grid:
        return Grid(self.n, self.L, self.N)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="capax", description=__doc__)
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", help="flat key=value file; flags override it")
    parser.add_argument("--n", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--s", type=float)
    parser.add_argument("--q", type=float)
    parser.add_argument("--p", type=float)
    parser.add_argument("--r", type=float)
    parser.add_argument("--N", type=int)
    parser.add_argument("--L", type=float)
    parser.add_argument("--kind", choices=("riesz", "bessel"))
    parser.add_argument("--tol", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--levels", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--output")
    parser.add_argument("--check")
    parser.add_argument("--family")
    parser.add_argument("--count", type=int)
    parser.add_argument("--set", dest="set_spec",
                        help="mask constructor, e.g. ball:0.25 or ball:0.2+cube:0.3")
    parser.add_argument("--input", help="input file (Field/Mask/report JSON)")
    parser.add_argument("--t", type=float, help="exponent for the ibp check")
    parser.add_argument("--norm",
                        choices=("m", "otilde", "kv", "n", "f", "lqcap", "lambda", "beta"))
    parser.add_argument("--method", choices=("fast", "direct"))
    parser.add_argument("--R", type=float, help="Wolff truncation radius (omit for infinite)")
    parser.add_argument("--atoms", help="atom list 'x[,y[,z]]:mass;...'")
    parser.add_argument("--extremal-out", dest="extremal_out",
                        help="also write the capacity extremal Field here")
    parser.add_argument("--refine", help="comma-separated grid sizes for a refinement study")
    return parser


def _load_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (expected key=value): {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


_CONFIG_TYPES = {
    "n": int, "N": int, "seed": int, "levels": int, "threads": int, "count": int,
    "alpha": float, "s": float, "q": float, "p": float, "r": float, "L": float,
    "tol": float, "t": float, "R": float,
}


def parse_args(argv) -> RunConfig:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    values = {k: v for k, v in vars(ns).items() if v is not None and k != "config"}
    if ns.config:
        file_values = _load_config_file(ns.config)
        for key, raw in file_values.items():
            dest = "set_spec" if key == "set" else key
            if dest not in RunConfig.__dataclass_fields__:
                raise ValueError(f"unknown config key {key!r}")
            if dest not in values or dest == "command":
                conv = _CONFIG_TYPES.get(dest, str)
                values.setdefault(dest, conv(raw))
    return RunConfig(**values)


def parse_set_spec(grid: Grid, spec: str) -> Mask:
    """ball:R | cube:a | annulus:r1:r2, joined by '+' for unions."""
    mask = Mask.empty(grid)
    for part in spec.split("+"):
        bits = part.split(":")
        name = bits[0]
        try:
            if name == "ball":
                mask = mask | ball_mask(grid, float(bits[1]))
            elif name == "cube":
                mask = mask | cube_mask(grid, float(bits[1]))
            elif name == "annulus":
                mask = mask | annulus_mask(grid, float(bits[1]), float(bits[2]))
            else:
                raise ValueError(f"unknown set constructor {name!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"bad set spec {part!r}: {exc}") from exc
    return mask


def parse_atoms(spec: str, dim: int):
    positions, masses = [], []
    for part in spec.split(";"):
        if not part.strip():
            continue
        coords, mass = part.rsplit(":", 1)
        pos = [float(c) for c in coords.split(",")]
        if len(pos) != dim:
            raise ValueError(f"atom {part!r} has {len(pos)} coordinates, expected {dim}")
        positions.append(pos)
        masses.append(float(mass))
    return positions, masses


def _read_field(path: str) -> Field:
    with open(path) as fh:
        return field_from_json(fh.read())


def _load_mask(cfg: RunConfig, grid: Grid) -> Mask:
    if cfg.set_spec:
        return parse_set_spec(grid, cfg.set_spec)
    if cfg.input:
        with open(cfg.input) as fh:
            return mask_from_json(fh.read())
    raise ValueError("capacity needs --set or --input")


def _write(path: str, text: str):
    with open(path, "w") as fh:
        fh.write(text)


def _write_manifest(cfg: RunConfig, output: str, wall_time: float):
    import scipy

    manifest = {
        "config": asdict(cfg),
        "versions": {"capax": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": wall_time,
    }
    _write(output + ".manifest.json", json.dumps(manifest, indent=2))


def run(cfg: RunConfig) -> int:
    """Dispatch one command; returns the process exit status."""
    start = time.monotonic()
    outputs = []          # (path, text)
    degraded = False

    if cfg.command == "capacity":
        grid = cfg.grid()
        mask = _load_mask(cfg, grid)
        result = capacity(mask, cfg.params(), cfg.kind, tol=cfg.tol)
        degraded = not result.converged
        print(f"capacity value={result.value:.10g} residual={result.feasibility_residual:.3g} "
              f"gap={result.gap:.3g} iterations={result.iterations} converged={result.converged}")
        if cfg.output:
            outputs.append((cfg.output, result.to_json()))
        if cfg.extremal_out:
            outputs.append((cfg.extremal_out, field_to_json(result.extremal)))

    elif cfg.command == "potential":
        if not cfg.input:
            raise ValueError("potential needs --input (a Field JSON file)")
        f = _read_field(cfg.input)
        fn = riesz_potential if cfg.kind == "riesz" else bessel_potential
        out = fn(f, cfg.alpha, cfg.method)
        print(f"potential kind={cfg.kind} max={np.max(out.values):.10g} "
              f"min={np.min(out.values):.10g}")
        if cfg.output:
            outputs.append((cfg.output, field_to_json(out)))

    elif cfg.command == "wolff":
        grid = cfg.grid()
        atoms = ()
        density = None
        if cfg.atoms:
            positions, masses = parse_atoms(cfg.atoms, grid.dim)
            atoms = tuple(zip([tuple(p) for p in positions], masses))
        if cfg.input:
            density = _read_field(cfg.input)
            grid = density.grid
        if not atoms and density is None:
            raise ValueError("wolff needs --atoms and/or --input density")
        mu = Measure(grid, atoms, density)
        R = math.inf if cfg.R is None else cfg.R
        out = wolff_potential(mu, cfg.alpha, cfg.s, R)
        print(f"wolff max={np.max(out.values):.10g} total_mass={mu.total_mass:.10g}")
        if cfg.output:
            outputs.append((cfg.output, field_to_json(out)))

    elif cfg.command == "choquet":
        if not cfg.input:
            raise ValueError("choquet needs --input (a nonnegative Field JSON file)")
        f = _read_field(cfg.input)
        value = choquet_integral(f, cfg.params(), cfg.kind, levels=cfg.levels, tol=cfg.tol)
        print(f"choquet integral={value:.10g}")
        if cfg.output:
            outputs.append((cfg.output, json.dumps({"value": value})))

    elif cfg.command == "norm":
        if not cfg.norm:
            raise ValueError("norm needs --norm {m,otilde,kv,n,f,lqcap,lambda,beta}")
        if not cfg.input:
            raise ValueError("norm needs --input (a Field JSON file)")
        f = _read_field(cfg.input)
        params = cfg.params()
        if cfg.norm == "lqcap":
            if cfg.q is None:
                raise ValueError("lqcap needs --q")
            value = lq_cap_norm(f, cfg.q, params, cfg.kind, levels=cfg.levels, tol=cfg.tol)
            print(f"lqcap norm={value:.10g}")
            if cfg.output:
                outputs.append((cfg.output, json.dumps({"value": value})))
        else:
            fns = {"m": m_norm, "otilde": otilde_norm, "kv": kv_norm, "n": n_norm,
                   "f": f_norm, "lambda": lambda_functional, "beta": beta_functional}
            est = fns[cfg.norm](f, params, cfg.kind, tol=cfg.tol)
            print(f"{cfg.norm} norm: lower={est.lower:.10g} upper={est.upper:.10g} "
                  f"flags={list(est.flags)}")
            if cfg.output:
                outputs.append((cfg.output, est.to_json()))

    elif cfg.command == "verify":
        if not cfg.check:
            raise ValueError("verify needs --check")
        params = cfg.params()
        kw = {}
        if cfg.check == "ibp":
            kw["t"] = cfg.t
        if cfg.check in ("adams", "main2", "newnorm2", "kv") and cfg.q is not None:
            kw["q"] = cfg.q
        if cfg.check == "boundedness" and cfg.R is not None:
            kw["R"] = cfg.R
        if cfg.refine:
            Ns = [int(x) for x in cfg.refine.split(",")]
            report = refinement_study(cfg.check, params, Ns, cfg.L, cfg.kind,
                                      cfg.seed, cfg.count, cfg.levels, cfg.tol, **kw)
        else:
            report = run_check(cfg.check, params, cfg.grid(), cfg.kind, cfg.seed,
                               cfg.count, cfg.levels, cfg.tol, **kw)
        n_done = sum(1 for s in report.samples if not s.skipped)
        print(f"check={report.inequality_id} samples={n_done} max_ratio={report.max_ratio:.6g}")
        for N, ratio in report.refinement:
            print(f"  N={N}: max_ratio={ratio:.6g}")
        if math.isinf(report.max_ratio):
            raise ValueError("infinite ratio in report: inequality check failed hard")
        if cfg.output:
            outputs.append((cfg.output, report_to_json(report)))
            base = cfg.output[:-5] if cfg.output.endswith(".json") else cfg.output
            outputs.append((base + ".csv", report_to_csv(report)))

    elif cfg.command == "report":
        if not cfg.input:
            raise ValueError("report needs --input (a report JSON file)")
        with open(cfg.input) as fh:
            doc = json.load(fh)
        print(f"inequality: {doc.get('inequality_id')}")
        print(f"max_ratio:  {doc.get('max_ratio')}")
        for s in doc.get("samples", []):
            mark = " (skipped)" if s.get("skipped") else ""
            print(f"  #{s['sample_id']}: lhs={s['lhs']:.6g} rhs={s['rhs']:.6g} "
                  f"ratio={s['ratio']:.6g}{mark}")
        if cfg.output:
            rows = ["sample_id,lhs,rhs,ratio"]
            rows += [f"{s['sample_id']},{s['lhs']!r},{s['rhs']!r},{s['ratio']!r}"
                     for s in doc.get("samples", [])]
            outputs.append((cfg.output, "\n".join(rows) + "\n"))

    else:
        raise ValueError(f"unknown command {cfg.command!r}")

    for path, text in outputs:
        _write(path, text)
    if cfg.output:
        _write_manifest(cfg, cfg.output, time.monotonic() - start)
    return 2 if degraded else 0


def main(argv=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
