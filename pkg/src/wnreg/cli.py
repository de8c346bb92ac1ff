"""
``wnreg`` batch driver.

    wnreg <command> --config FILE [--seed N] [--workers N] [--out DIR]

Commands: ``ste-regularity``, ``ste-norm``, ``bs-norm``, ``she-bound``,
``selftest``.  The configuration is a YAML (or JSON) mapping with optional
globals ``seed``, ``workers``, ``out`` and one block per module:
``transport`` for the ``ste-*`` commands, ``bargmann`` for ``bs-norm`` and
``heat`` for ``she-bound``.  See ``demos/configs`` for complete examples.

Every command writes one CSV plus ``summary.txt`` to the output directory.
Both start with comment lines echoing the artifact version and the resolved
configuration as JSON.  Divergences are reported in-band (``inf`` cells and
a ``status`` column), never as a crash.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 selftest
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import __version__
from . import bargmann as bg
from . import chaos as ch
from . import heat as ht
from . import transport as tr

COMMANDS = ("ste-regularity", "ste-norm", "bs-norm", "she-bound", "selftest")
BLOCKS = {"ste-regularity": "transport", "ste-norm": "transport", "bs-norm": "bargmann",
          "she-bound": "heat", "selftest": None}

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_SELFTEST = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


# --------------------------------------------------------------------------- config

@dataclass
class RunConfig:
    command: str
    seed: int = 0
    workers: int = 1
    out: str = "wnreg_out"
    blocks: dict = field(default_factory=dict)
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def to_dict(self) -> dict:
        d = {"command": self.command, "seed": self.seed, "workers": self.workers, "out": self.out}
        d.update(self.blocks)
        return d

    def echo(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, raw: Any, command: str | None = None, *, seed: int | None = None,
                  workers: int | None = None, out: str | None = None, base_dir: Path | None = None) -> "RunConfig":
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "configuration must be a mapping")
        raw = dict(raw)
        file_cmd = raw.pop("command", None)
        if command is None:
            command = file_cmd
        elif file_cmd is not None and file_cmd != command:
            raise ConfigError("command", f"file says {file_cmd!r} but {command!r} was requested")
        if command not in COMMANDS:
            raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}, got {command!r}")
        g_seed = raw.pop("seed", None)
        g_workers = raw.pop("workers", 1)
        g_out = raw.pop("out", "wnreg_out")
        block = BLOCKS[command]
        if block is not None and not isinstance(raw.get(block), dict):
            raise ConfigError(block, f"command {command!r} needs a '{block}' mapping")
        if block is not None and g_seed is None:
            g_seed = raw[block].get("seed")
        seed_v = _as_int(seed if seed is not None else (0 if g_seed is None else g_seed), "seed", lo=0)
        workers_v = _as_int(workers if workers is not None else g_workers, "workers", lo=1)
        out_v = str(out if out is not None else g_out)
        cfg = cls(command, seed_v, workers_v, out_v, raw, base_dir or Path("."))
        validate(cfg)
        return cfg


def _as_int(v, name: str, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(name, f"expected an integer, got {v!r}")
    v = int(v)
    if lo is not None and v < lo:
        raise ConfigError(name, f"must be >= {lo}")
    return v


def _as_float(v, name: str) -> float:
    if isinstance(v, bool):
        raise ConfigError(name, f"expected a number, got {v!r}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {v!r}") from None


def _req(block: dict, key: str, path: str):
    if key not in block:
        raise ConfigError(f"{path}.{key}", "missing")
    return block[key]


def _grid(block: dict, key: str, path: str, required: bool = True, default=None) -> list[float]:
    if key not in block:
        if required:
            raise ConfigError(f"{path}.{key}", "missing")
        return default
    v = block[key]
    v = v if isinstance(v, list) else [v]
    if not v:
        raise ConfigError(f"{path}.{key}", "grid must be non-empty")
    return [_as_float(x, f"{path}.{key}") for x in v]


def _build(factory, entry, name: str):
    if not isinstance(entry, dict):
        raise ConfigError(name, "expected a {kind, params} mapping")
    try:
        return factory(entry)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from None


def _ste_cases(block: dict) -> list[tuple[str, tr.SteCoefficients]]:
    def coeffs(entry: dict, path: str) -> tr.SteCoefficients:
        nu = _build(tr.profile_from_config, _req(entry, "nu", path), f"{path}.nu")
        sg = _build(tr.profile_from_config, _req(entry, "sigma", path), f"{path}.sigma")
        try:
            return tr.SteCoefficients(nu, sg)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None

    if "cases" in block:
        cases = block["cases"]
        if not isinstance(cases, list) or not cases:
            raise ConfigError("transport.cases", "must be a non-empty list")
        out = []
        for i, entry in enumerate(cases):
            path = f"transport.cases[{i}]"
            if not isinstance(entry, dict):
                raise ConfigError(path, "expected a mapping")
            out.append((str(entry.get("name", f"case{i}")), coeffs(entry, path)))
        return out
    return [(str(block.get("name", "case0")), coeffs(block, "transport"))]


def _operator(entry, name: str) -> ch.DiagonalOperator:
    def make(s: dict):
        kind = s.get("kind")
        if kind == "uniform":
            return ch.DiagonalOperator.uniform(float(s["lambda"]))
        if kind == "identity":
            return ch.DiagonalOperator.identity()
        if kind == "diagonal":
            fill = s.get("fill")
            return ch.DiagonalOperator(tuple(float(v) for v in s["eigenvalues"]),
                                       None if fill is None else float(fill))
        raise ValueError(f"unknown operator kind {kind!r}")
    return _build(make, entry, name)


def _bs_target(block: dict, base_dir: Path, ranks: list[int]):
    entry = _req(block, "target", "bargmann")
    if not isinstance(entry, dict):
        raise ConfigError("bargmann.target", "expected a mapping")
    kind = entry.get("kind")
    if kind == "chaos":
        path = base_dir / str(_req(entry, "file", "bargmann.target"))
        text = path.read_text(encoding="utf-8")     # OSError propagates as an I/O failure
        try:
            return ch.loads(text), None
        except ValueError as exc:
            raise ConfigError("bargmann.target.file", f"{path}: {exc}") from None
    if kind == "wick_exponential":
        f = [complex(v) for v in _req(entry, "f", "bargmann.target")]
        n = _as_int(_req(entry, "max_order", "bargmann.target"), "bargmann.target.max_order", lo=0)
        return ch.wick_exponential(f, n), None
    if kind == "ste":
        c = _ste_cases(entry | {"name": "target"})[0][1] if "nu" in entry else None
        if c is None:
            raise ConfigError("bargmann.target.nu", "missing")
        t = _as_float(_req(entry, "t", "bargmann.target"), "bargmann.target.t")
        x = _as_float(entry.get("x", 0.0), "bargmann.target.x")
        if not t > 0:
            raise ConfigError("bargmann.target.t", "must be > 0")
        max_rank = _as_int(entry.get("max_rank", ranks[-1]), "bargmann.target.max_rank", lo=ranks[-1])
        basis = tr.HermiteBasis.for_interval(t)
        if "basis" in entry:
            b = entry["basis"]
            basis = tr.HermiteBasis(_as_float(b.get("center", basis.center), "bargmann.target.basis.center"),
                                    _as_float(b.get("scale", basis.scale), "bargmann.target.basis.scale"))
        return tr.ste_u_functional(c, t, x, basis, max_rank), (c, t, x)
    raise ConfigError("bargmann.target.kind", f"expected chaos | wick_exponential | ste, got {kind!r}")


def _ranks(block: dict) -> list[int]:
    raw = _req(block, "ranks", "bargmann")
    if isinstance(raw, dict):
        ranks = list(range(_as_int(raw.get("start", 1), "bargmann.ranks.start", lo=1),
                           _as_int(_req(raw, "stop", "bargmann.ranks"), "bargmann.ranks.stop", lo=1) + 1))
    else:
        ranks = [_as_int(r, "bargmann.ranks", lo=1) for r in (raw if isinstance(raw, list) else [raw])]
    if not ranks:
        raise ConfigError("bargmann.ranks", "grid must be non-empty")
    if any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ConfigError("bargmann.ranks", "must be strictly increasing")
    return ranks


def _policy(block: dict) -> bg.MembershipPolicy:
    p = block.get("policy", {}) or {}
    if not isinstance(p, dict):
        raise ConfigError("bargmann.policy", "expected a mapping")
    try:
        return bg.MembershipPolicy(**p)
    except TypeError as exc:
        raise ConfigError("bargmann.policy", str(exc)) from None


def _heat_parts(block: dict):
    d = _as_int(block.get("d", 1), "heat.d", lo=1)
    cov = ht.NoiseCovariance(_build(ht.temporal_from_config, _req(block, "gamma", "heat"), "heat.gamma"),
                             _build(ht.spatial_from_config, _req(block, "Lambda", "heat"), "heat.Lambda"), d)
    u0 = _build(ht.initial_from_config, block.get("u0", {"kind": "constant", "value": 1.0}), "heat.u0")
    ts = _grid(block, "t", "heat")
    if any(not t > 0 for t in ts):
        raise ConfigError("heat.t", "times must be > 0")
    lams = _grid(block, "lambda", "heat")
    xs_raw = block.get("x", 0.0)
    xs_raw = xs_raw if isinstance(xs_raw, list) else [xs_raw]
    if not xs_raw:
        raise ConfigError("heat.x", "grid must be non-empty")
    xs = []
    for p in xs_raw:
        if isinstance(p, list):
            if len(p) != d:
                raise ConfigError("heat.x", f"point {p} does not have d={d} coordinates")
            xs.append([_as_float(v, "heat.x") for v in p])
        else:
            xs.append(_as_float(p, "heat.x"))
    paths = _as_int(_req(block, "paths", "heat"), "heat.paths", lo=1)
    steps = _as_int(_req(block, "steps", "heat"), "heat.steps", lo=1)
    modes = block.get("modes", ["skorokhod", "stratonovich"])
    modes = modes if isinstance(modes, list) else [modes]
    if not modes or any(m not in ("skorokhod", "stratonovich") for m in modes):
        raise ConfigError("heat.modes", "entries must be 'skorokhod' or 'stratonovich'")
    chunk = _as_int(block.get("chunk", 1024), "heat.chunk", lo=1)
    return cov, u0, ts, xs, lams, paths, steps, modes, chunk


def validate(cfg: RunConfig) -> None:
    """Build every object a command needs without running it; raises :class:`ConfigError`."""
    if cfg.command in ("ste-regularity", "ste-norm"):
        b = cfg.blocks["transport"]
        _ste_cases(b)
        ts = _grid(b, "t_grid", "transport")
        if any(not t > 0 for t in ts):
            raise ConfigError("transport.t_grid", "times must be > 0")
        if cfg.command == "ste-norm":
            _grid(b, "x_grid", "transport")
            _grid(b, "s_grid", "transport")
        tol = _as_float(b.get("tol", 1e-9), "transport.tol")
        if not tol >= 0:
            raise ConfigError("transport.tol", "must be >= 0")
    elif cfg.command == "bs-norm":
        b = cfg.blocks["bargmann"]
        _ranks(b)
        _operator(_req(b, "K", "bargmann"), "bargmann.K")
        _as_float(_req(b, "s", "bargmann"), "bargmann.s")
        if b.get("samples") is not None:
            _as_int(b["samples"], "bargmann.samples", lo=1)
        _policy(b)
        kind = (b.get("target") or {}).get("kind") if isinstance(b.get("target"), dict) else None
        if kind not in ("chaos", "wick_exponential", "ste"):
            raise ConfigError("bargmann.target.kind", f"expected chaos | wick_exponential | ste, got {kind!r}")
    elif cfg.command == "she-bound":
        _heat_parts(cfg.blocks["heat"])


# --------------------------------------------------------------------------- output helpers

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _header(cfg: RunConfig) -> str:
    return f"# wnreg {__version__} command={cfg.command}\n# config: {cfg.echo()}\n"


def _table(cfg: RunConfig, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(_header(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


@dataclass
class Outcome:
    csv_name: str
    csv_text: str
    summary: list[str]
    warnings: list[str] = field(default_factory=list)
    exit_code: int = EXIT_OK


# --------------------------------------------------------------------------- commands

STE_COLUMNS = ["case", "t", "x", "theta", "varsigma", "kappa", "class", "s_threshold", "s", "norm_or_inf", "status"]


def _ste(cfg: RunConfig, with_norms: bool) -> Outcome:
    b = cfg.blocks["transport"]
    cases = _ste_cases(b)
    ts = _grid(b, "t_grid", "transport")
    tol = _as_float(b.get("tol", 1e-9), "transport.tol")
    rows, summary, warns = [], [], []
    for name, c in cases:
        for t in ts:
            I = tr.compute_integrals(c, t)
            v = tr.classify_regularity(c, t, tol)
            base = [name, t]
            ints = [I.theta, I.varsigma, v.kappa, v.regularity, v.s_threshold]
            summary.append(f"{name} t={t!r}: kappa={v.kappa!r} class={v.regularity} "
                           f"s_threshold={v.s_threshold!r}")
            if not with_norms:
                rows.append(base + [None] + ints + [None, None, "ok"])
                continue
            for x in _grid(b, "x_grid", "transport"):
                for s in _grid(b, "s_grid", "transport"):
                    try:
                        val, status = tr.ste_norm(c, t, x, s), "ok"
                    except tr.DivergentNorm:
                        val, status = math.inf, "diverging"
                        warns.append(f"{name} t={t!r} x={x!r} s={s!r}: norm diverges (2^s kappa >= 1)")
                    rows.append(base + [x] + ints + [s, val, status])
    name = "ste_norm.csv" if with_norms else "ste_regularity.csv"
    return Outcome(name, _table(cfg, STE_COLUMNS, rows), summary, warns)


def _bs_norm(cfg: RunConfig) -> Outcome:
    b = cfg.blocks["bargmann"]
    ranks = _ranks(b)
    K = _operator(b["K"], "bargmann.K")
    s = _as_float(b["s"], "bargmann.s")
    samples = b.get("samples")
    samples = None if samples is None else _as_int(samples, "bargmann.samples", lo=1)
    policy = _policy(b)
    target, ste_info = _bs_target(b, cfg.base_dir, ranks)
    curve = bg.norm_curve(target, K, s, ranks, samples, cfg.seed, antithetic=bool(b.get("antithetic", False)),
                          chunk=_as_int(b.get("chunk", 8192), "bargmann.chunk", lo=1), workers=cfg.workers)
    verdict = bg.classify_membership(curve, policy) if len(curve) >= 3 else None
    buf = io.StringIO()
    buf.write(_header(cfg))
    bg.write_curve_csv(buf, curve, seed=cfg.seed, policy=policy, verdict=verdict)
    summary = [f"operator K={K.describe()} s={s!r} ranks={ranks[0]}..{ranks[-1]} samples={samples}"]
    summary.append(f"membership: {verdict}" if verdict is not None
                   else "membership: not classified (needs >= 3 ranks)")
    warns = []
    if ste_info is not None:
        c, t, x = ste_info
        try:
            summary.append(f"closed-form norm: {tr.ste_norm(c, t, x, s)!r}")
        except tr.DivergentNorm as exc:
            summary.append(f"closed-form norm: inf ({exc})")
            warns.append(f"target norm diverges at s={s!r}")
    if any(not e.reliable for e in curve):
        warns.append("some ranks produced non-finite samples (see nonfinite_count)")
    return Outcome("bs_norm.csv", buf.getvalue(), summary, warns)


HEAT_COLUMNS = ["t", "x", "lambda", "mode", "mean", "stderr", "paths", "steps", "nonfinite", "status"]


def _she_bound(cfg: RunConfig) -> Outcome:
    cov, u0, ts, xs, lams, paths, steps, modes, chunk = _heat_parts(cfg.blocks["heat"])
    rows, summary, warns = [], [], []
    for t, x, lam in itertools.product(ts, xs, lams):
        res = ht.fk_bounds(cov, u0, t, x, lam, paths, steps, cfg.seed, chunk=chunk, workers=cfg.workers)
        for mode in modes:
            e = res[mode]
            status = "ok" if e.reliable else "nonfinite"
            mean = e.mean if e.reliable else math.inf
            if not e.reliable:
                warns.append(f"t={t!r} x={x!r} lambda={lam!r} {mode}: {e.nonfinite} overflowing samples")
            xs_txt = json.dumps(x) if isinstance(x, list) else x
            rows.append([t, xs_txt, lam, mode, mean, e.stderr, e.paths, e.grid_steps, e.nonfinite, status])
            summary.append(f"t={t!r} x={xs_txt} lambda={lam!r} {mode} bound: {_fmt(mean)} +- {_fmt(e.stderr)}")
    summary.append("values are upper bounds on the squared norm, not the norm itself")
    return Outcome("she_bound.csv", _table(cfg, HEAT_COLUMNS, rows), summary, warns)


def _selftest(cfg: RunConfig) -> Outcome:
    from .selftest import run_all

    results = run_all()
    rows = [[name, module, "pass" if ok else "fail", detail] for name, module, ok, detail in results]
    failed = [r[0] for r in rows if r[2] == "fail"]
    summary = [f"{r[0]} [{r[1]}]: {r[2]}" for r in rows]
    summary.append(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    return Outcome("selftest.csv", _table(cfg, ["check", "module", "status", "detail"], rows), summary,
                   [f"selftest failed: {n}" for n in failed], EXIT_SELFTEST if failed else EXIT_OK)


HANDLERS = {
    "ste-regularity": lambda cfg: _ste(cfg, False),
    "ste-norm": lambda cfg: _ste(cfg, True),
    "bs-norm": _bs_norm,
    "she-bound": _she_bound,
    "selftest": _selftest,
}


def run(cfg: RunConfig) -> tuple[int, Path]:
    """Execute ``cfg`` and write its outputs; returns ``(exit_code, output_dir)``."""
    outcome = HANDLERS[cfg.command](cfg)
    out = Path(cfg.out)
    if not out.is_absolute():
        out = Path.cwd() / out
    out.mkdir(parents=True, exist_ok=True)
    (out / outcome.csv_name).write_text(outcome.csv_text, encoding="utf-8")
    lines = [_header(cfg).rstrip("\n")] + outcome.summary
    lines += [f"warning: {w}" for w in outcome.warnings]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for w in outcome.warnings:
        print(f"wnreg: warning: {w}", file=sys.stderr)
    return outcome.exit_code, out


def parse_header(text: str) -> dict:
    """Recover the echoed configuration from an output file's header."""
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise ValueError("no config header found")


def main(argv: Sequence[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="wnreg", description="Regularity and norm computations for white-noise functionals.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="YAML/JSON configuration file (optional for selftest)")
    ap.add_argument("--seed", type=int, help="master seed; overrides any seed in the config")
    ap.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--version", action="version", version=f"wnreg {__version__}")
    args = ap.parse_args(argv)
    try:
        raw, base = {}, Path(".")
        if args.config is not None:
            path = Path(args.config)
            base = path.parent
            try:
                raw = yaml.safe_load(path.read_text(encoding="utf-8"))
            except yaml.YAMLError as exc:
                raise ConfigError("<file>", f"not valid YAML/JSON: {exc}") from None
        elif args.command != "selftest":
            raise ConfigError("--config", f"command {args.command!r} needs a configuration file")
        cfg = RunConfig.from_dict(raw, args.command, seed=args.seed, workers=args.workers,
                                  out=args.out, base_dir=base)
        code, out = run(cfg)
    except ConfigError as exc:
        print(f"wnreg: config error in field '{exc.field}': {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"wnreg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wnreg: wrote {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
