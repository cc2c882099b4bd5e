"""Command-line front end: ``qrng-cert <command> [options]``.

Configuration comes from built-in defaults, then an optional JSON file
(``--config``), then command-line flags; later sources win. Recognised
config keys mirror the long flags with dashes turned into underscores:
``model, m, reps, rng_seed, seed_file, epsilon_exp, out, workers, mode``.

Exit codes: 0 success, 2 certification-negative (nothing certified or
extraction refused), 3 input error, 4 selftest failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, entropy, extract, protocol, selftest, simulate, stattests, tomo
from .bits import BitString, read_bit_container, read_seed_file, write_bit_container
from .errors import BudgetError, DomainError, ExtractionRefused, FormatError, InsufficientSeedError
from .quantum import BlochVector, bloch_to_density
from .rng import default_workers, make_rng

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_SELFTEST = 0, 2, 3, 4

DEFAULTS = {
    "model": "qubit",
    "m": None,
    "reps": 200,
    "rng_seed": 0,
    "seed_file": None,
    "epsilon_exp": 0,
    "out": None,
    "workers": None,
    "mode": "montecarlo",
}
CONFIG_KEYS = frozenset(DEFAULTS)
# spawn keys separating the streams derived from one --rng-seed
_SCHEDULE_STREAM, _EXTRACTOR_STREAM = 1, 2


class InputError(Exception):
    """Bad configuration or input file; maps to exit code 3."""


# -- configuration -----------------------------------------------------------


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("config file must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(load_config(args.config))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["workers"] is None:
        cfg["workers"] = default_workers()
    return cfg


def config_hash(cfg: dict, extra: dict | None = None) -> str:
    """SHA-256 of the canonical JSON of the settings that affect results."""
    payload = {k: v for k, v in cfg.items() if k not in ("out",)}
    payload.update(extra or {})
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def parse_int(value, what: str) -> int:
    """Integer from ``1000000``, ``"1e6"`` or ``"10**6"``-free decimal text."""
    try:
        if isinstance(value, str):
            x = float(value) if any(c in value for c in ".eE") else int(value)
        else:
            x = value
        if isinstance(x, float):
            if not x.is_integer():
                raise ValueError
            x = int(x)
        return int(x)
    except (TypeError, ValueError):
        raise InputError(f"{what} must be an integer, got {value!r}") from None


def parse_grid(value) -> list[int]:
    if value is None:
        raise InputError("--m is required")
    items = value if isinstance(value, list) else str(value).split(",")
    grid = [parse_int(v, "m") for v in items if str(v).strip()]
    if not grid or min(grid) < 2:
        raise InputError("every m must be at least 2")
    return grid


def parse_model(spec: str) -> simulate.SourceModel:
    """Model from a name or a custom specification.

    ``qubit``, ``ququart``, ``mixed`` / ``mixed<d>``, ``tomo-pure``,
    ``tomo-mixed``, ``bloch:rx,ry,rz`` or ``probs:px0,px1,...;pz0,pz1,...``.
    """
    name = str(spec).strip()
    try:
        if name == "qubit":
            return simulate.qubit_experiment_model()
        if name == "ququart":
            return simulate.ququart_experiment_model()
        if name.startswith("mixed"):
            return simulate.maximally_mixed_model(int(name[5:] or 2))
        if name in ("tomo-pure", "tomo-mixed"):
            return tomo.comparison_source(pure=name == "tomo-pure")
        if name.startswith("bloch:"):
            r = BlochVector(*(float(v) for v in name[6:].split(",")))
            return simulate.SourceModel.from_state(bloch_to_density(r), label=name)
        if name.startswith("probs:"):
            px, pz = name[6:].split(";")
            p_x = np.array([float(v) for v in px.split(",")])
            p_z = np.array([float(v) for v in pz.split(",")])
            return simulate.SourceModel(p_x.size, p_x, p_z, label=name)
    except (ValueError, TypeError) as exc:
        raise InputError(f"invalid model {spec!r}: {exc}") from exc
    raise InputError(f"unknown model {spec!r}")


def incompatibility(dim: int) -> float:
    """``q = log2 d`` for the computational/Fourier pair used by every model."""
    return math.log2(dim)


def derived_bits(rng_seed: int, stream: int, nbits: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(rng_seed), spawn_key=(stream,))
    return make_rng(ss).integers(0, 2, size=nbits, dtype=np.uint8)


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _header_lines(cfg: dict, command: str) -> list[str]:
    return [f"qrng-cert {__version__} {command}", f"config_hash: {config_hash(cfg, {'command': command})}"]


# -- commands ----------------------------------------------------------------


def cmd_simulate(cfg: dict) -> int:
    model = parse_model(cfg["model"])
    if cfg["m"] is None:
        raise InputError("--m is required")
    m = parse_int(cfg["m"], "m")
    if m < 2:
        raise InputError("m must be at least 2")
    if cfg["out"] is None:
        raise InputError("--out is required for simulate")
    seed = parse_int(cfg["rng_seed"], "rng seed")
    if cfg["seed_file"]:
        seed_bits = read_seed_file(cfg["seed_file"])
    else:
        # 64 blocks: the chance that all are rejected is below 2^-64
        seed_bits = derived_bits(seed, _SCHEDULE_STREAM, 64 * protocol.seed_length(m))
    run = simulate.sample_run(model, m, seed_bits, seed)
    run.meta["config_hash"] = config_hash(cfg, {"command": "simulate"})
    run.meta["seed_source"] = "file" if cfg["seed_file"] else "derived"
    simulate.write_run(cfg["out"], run, model.p_x, model.p_z)
    print(f"wrote {cfg['out']}: m={m}, n_X={run.schedule.n_x}, control counts {run.x_counts.tolist()}")
    return EXIT_OK


def cmd_certify(cfg: dict, run_path: str) -> int:
    run = simulate.read_run(run_path)
    meta = {
        "label": run.label,
        "tool_version": __version__,
        "config_hash": config_hash(cfg, {"command": "certify", "run": run.meta.get("config_hash")}),
    }
    cert = protocol.certify(run.m, run.x_counts, incompatibility(run.dim), meta)
    if cfg["out"] is not None:
        Path(cfg["out"]).write_text(cert.to_text(), encoding="utf-8")
    print(
        f"m={cert.m} n_X={cert.n_x} counts={list(cert.counts)} H~={cert.h_half_estimate:.6f} "
        f"bound={cert.min_entropy_bound:.6f} t={cert.seed_cost} b_sec={cert.b_sec:.3f} rate={cert.rate:.6f}"
    )
    if not cert.certifies_anything:
        print("certifies nothing: the certified bit count is not positive, no randomness can be extracted")
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_extract(cfg: dict, run_path: str, cert_path: str) -> int:
    if cfg["out"] is None:
        raise InputError("--out is required for extract")
    run = simulate.read_run(run_path)
    cert = protocol.Certificate.from_text(Path(cert_path).read_text(encoding="utf-8"))
    eps = parse_int(cfg["epsilon_exp"], "epsilon exponent")
    n = run.schedule.n_z * (run.dim.bit_length() - 1)
    ell = min(extract.output_length(cert.b_sec, eps), n)
    if cfg["seed_file"]:
        seed = read_seed_file(cfg["seed_file"])
    else:
        seed = derived_bits(parse_int(cfg["rng_seed"], "rng seed"), _EXTRACTOR_STREAM, n + max(ell, 1) - 1)
    try:
        y = extract.extract_run(run, cert, seed, eps)
    except ExtractionRefused as exc:
        print(f"extraction refused: {exc}")
        return EXIT_NEGATIVE
    meta = {
        "tool_version": __version__,
        "config_hash": config_hash(cfg, {"command": "extract", "certificate": cert.to_text()}),
        "m": run.m,
        "input_bits": n,
        "epsilon_exp": eps,
    }
    write_bit_container(cfg["out"], BitString.from_bits(y, meta))
    print(f"wrote {cfg['out']}: {y.size} bits from {n} raw bits")
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    model = parse_model(cfg["model"])
    grid = parse_grid(cfg["m"])
    q = incompatibility(model.dim)
    reps = parse_int(cfg["reps"], "reps")
    h_inf = entropy.classical_min_entropy(model.p_z)
    lines = ["m,mean_rate,std_rate,classical_min_entropy"]
    for i, m in enumerate(grid):
        if cfg["mode"] == "exact":
            s = protocol.expected_rate(m, model.p_x, q, mode="exact")
        elif cfg["mode"] == "montecarlo":
            ss = np.random.SeedSequence(parse_int(cfg["rng_seed"], "rng seed"), spawn_key=(i,))
            s = protocol.expected_rate(m, model.p_x, q, "montecarlo", reps, ss, cfg["workers"])
        else:
            raise InputError(f"unknown mode {cfg['mode']!r}")
        lines.append(f"{m},{s.mean:.9g},{s.std:.9g},{h_inf:.9g}")
    header = "".join(f"# {h}\n" for h in _header_lines(cfg, "sweep"))
    _write_text(cfg["out"], header + "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_compare_tomo(cfg: dict) -> int:
    model = parse_model(cfg["model"])
    if model.dim != 2:
        raise InputError("compare-tomo supports qubit models only")
    if model.rho is None:
        model = simulate.SourceModel.from_state(model.density(), model.label)
    rows = tomo.compare_sweep(
        model, parse_grid(cfg["m"]), parse_int(cfg["reps"], "reps"), parse_int(cfg["rng_seed"], "rng seed"), cfg["workers"]
    )
    up, tm = tomo.asymptotes(model)
    header = _header_lines(cfg, "compare-tomo") + [f"asymptotes: up={up:.9g} tomo={tm:.9g}"]
    _write_text(cfg["out"], tomo.sweep_csv(rows, header))
    return EXIT_OK


def cmd_stats(cfg: dict, bits_path: str) -> int:
    bits = read_bit_container(bits_path).to_array()
    try:
        result = stattests.battery(bits)
    except DomainError as exc:
        raise InputError(str(exc)) from exc
    header = _header_lines(cfg, "stats") + [f"bits: {bits.size}", f"verdict: {result.verdict}"]
    _write_text(cfg["out"], stattests.reports_csv(result.reports, header))
    return EXIT_OK


def cmd_selftest(cfg: dict) -> int:
    results = selftest.run_all()
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name} ({r.seconds:.2f} s): {r.detail}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_SELFTEST


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--model", help="qubit, ququart, mixed[d], tomo-pure, tomo-mixed, bloch:rx,ry,rz, probs:px;pz")
    common.add_argument("--m", help="number of measurements (comma-separated grid for sweeps)")
    common.add_argument("--reps", help="Monte Carlo repetitions per m")
    common.add_argument("--rng-seed", dest="rng_seed", help="integer seed of every derived stream")
    common.add_argument("--seed-file", dest="seed_file", help="seed-bit file (schedule seed or extractor seed)")
    common.add_argument("--epsilon-exp", dest="epsilon_exp", help="security exponent k, output shortened by 2k bits")
    common.add_argument("--out", help="output path (stdout for CSV commands when omitted)")
    common.add_argument("--workers", type=int, help="worker processes (default from QRNG_CERT_WORKERS)")
    common.add_argument("--mode", choices=("exact", "montecarlo"), help="sweep evaluation mode")

    parser = argparse.ArgumentParser(prog="qrng-cert", description="Certified randomness from a two-basis source.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate a run and write a run file")
    p = sub.add_parser("certify", parents=[common], help="certify a run file")
    p.add_argument("run")
    p = sub.add_parser("extract", parents=[common], help="hash a certified run to output bits")
    p.add_argument("run")
    p.add_argument("certificate")
    sub.add_parser("sweep", parents=[common], help="expected certified rate over an m grid (CSV)")
    sub.add_parser("compare-tomo", parents=[common], help="UP vs tomographic rates over an m grid (CSV)")
    p = sub.add_parser("stats", parents=[common], help="run the statistical battery on a bit file (CSV)")
    p.add_argument("bits")
    sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "certify":
            return cmd_certify(cfg, args.run)
        if args.command == "extract":
            return cmd_extract(cfg, args.run, args.certificate)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "compare-tomo":
            return cmd_compare_tomo(cfg)
        if args.command == "stats":
            return cmd_stats(cfg, args.bits)
        return cmd_selftest(cfg)
    except (InputError, FormatError, DomainError, BudgetError, InsufficientSeedError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
