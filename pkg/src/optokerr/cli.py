"""Command-line entry point.

Each subcommand reads a JSON config, validates it against :data:`CONFIG_SCHEMA`,
runs one workflow and writes deterministic CSV/JSON files plus ``manifest.json``
into ``--out``.

Exit codes: 0 success, 1 config error, 2 numerical failure (a
``diagnostic.json`` is written to the output directory).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .params import (CHI_AB_UNIT_HZ, TWO_PI, DriveParams, PhysicalParams, derive_effective)

THREADS_ENV = "OPTOKERR_THREADS"
WORKFLOWS = ("verify-averaging", "dynamics", "steady-sweep", "cat")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_complex = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_dim = {"type": "integer", "minimum": 2}
_grid = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start", "stop", "num"],
    "properties": {"start": _num, "stop": _num, "num": {"type": "integer", "minimum": 1}},
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "workflow": {"enum": list(WORKFLOWS)},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "physical": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mech_freq"],
            "properties": {
                "units": {"enum": ["Hz", "angular"]},
                "mech_freq": {"type": "number", "exclusiveMinimum": 0},
                "coupling": _num,
                "cubic_anharm": _num,
                "quartic_anharm": _num,
                "cavity_decay": _nonneg,
                "mech_decay": _nonneg,
                "cavity_freq": _nonneg,
                "bath_temp": _nonneg,
                "mean_occupation": _nonneg,
            },
        },
        "drive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eps_over_kappa": _nonneg,
                "eta_over_gamma": _nonneg,
                "Delta_over_Omega": _num,
                "delta_over_Omega": _num,
            },
        },
        "verify_averaging": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"filter": {"enum": ["neglect-w-products", "none"]}},
        },
        "dynamics": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim_a", "dim_b", "duration"],
            "properties": {
                "mode": {"enum": ["master", "full-vs-effective"]},
                "dim_a": _dim,
                "dim_b": _dim,
                "duration": {"type": "number", "exclusiveMinimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "steps_per_period": {"type": "integer", "minimum": 8},
                "method": {"enum": ["rk4", "adaptive"]},
                "samples": {"type": "integer", "minimum": 2},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "positivity_tol": {"type": "number", "exclusiveMinimum": 0},
                "initial": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "alpha": _complex,
                        "beta": _complex,
                        "fock_a": {"type": "integer", "minimum": 0},
                    },
                },
            },
        },
        "steady_sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variable", "grid"],
            "properties": {
                "variable": {"enum": ["eta", "delta"]},
                "grid": _grid,
                "chi_ab_tilde": {"type": "array", "items": _num, "minItems": 1},
                "directions": {"type": "array", "minItems": 1, "uniqueItems": True,
                               "items": {"enum": ["up", "down"]}},
                "pinned_n_a": {"type": ["number", "null"], "minimum": 0},
            },
        },
        "cat": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha", "beta"],
            "properties": {
                "alpha": _complex,
                "beta": _complex,
                "ratios": {"type": "array", "items": _num, "minItems": 1},
                "chi_ab": {"type": "number", "not": {"const": 0}},
                "chi_b": _num,
                "dim": _dim,
                "overlap": {"enum": ["beta2", "alpha2"]},
                "purity_times": _grid,
            },
        },
    },
}


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def load_config(path: str | None, workflow: str) -> dict:
    if path is None:
        cfg: dict = {}
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validate_config(cfg)
    if cfg.get("workflow", workflow) != workflow:
        raise ConfigError(f"config is for workflow {cfg['workflow']!r}, not {workflow!r}")
    return cfg


def validate_config(cfg) -> None:
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(CONFIG_SCHEMA)
                                           .iter_errors(cfg))
    if err is not None:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"schema error at {where}: {err.message}")


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def physical_from(cfg: dict) -> PhysicalParams:
    block = dict(cfg.get("physical") or {})
    if not block:
        raise ConfigError("missing 'physical' block")
    units = block.pop("units", "Hz")
    try:
        if units == "angular":
            if "bath_temp" in block:
                raise ConfigError("angular units take mean_occupation, not bath_temp")
            return PhysicalParams.from_angular(**block)
        return PhysicalParams(**block)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"physical: {exc}") from exc


def drive_from(cfg: dict, p: PhysicalParams) -> DriveParams:
    return DriveParams.from_ratios(p, **(cfg.get("drive") or {}))


def resolve_threads(cli_value: int | None, cfg: dict) -> int:
    if cli_value is not None:
        n = cli_value
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
    else:
        n = cfg.get("threads", 1)
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, cfg: dict, workflow: str, files: list[str]) -> Path:
    manifest = {
        "artifact_version": __version__,
        "workflow": workflow,
        "config_sha256": config_hash(cfg),
        "files": {name: sha256_file(out / name) for name in sorted(files)},
    }
    path = out / "manifest.json"
    write_json(path, manifest)
    return path


# ---------------------------------------------------------------------------
# workflows
# ---------------------------------------------------------------------------

def run_verify_averaging(cfg: dict, out: Path, threads: int, echo) -> list[str]:
    from .symalg import (bogoliubov_effective, interaction_hamiltonian, keep_all,
                         closed_form_effective_terms, drop_w_products)

    mode = (cfg.get("verify_averaging") or {}).get("filter", "neglect-w-products")
    res = bogoliubov_effective(interaction_hamiltonian(),
                               keep=drop_w_products if mode == "neglect-w-products" else keep_all)
    lines = ["# first order", res.first.format(), "# second order", res.second.format(),
             "# constants", f"first: {res.first_constant}", f"second: {res.second_constant}"]
    (out / "averaging.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    table = []
    for order, poly in (("first", res.first), ("second", res.second)):
        for (i, j), c in sorted(poly.to_number_form().items()):
            table.append({"order": order, "n_a_power": i, "n_b_power": j, "coefficient": str(c)})
    echo(f"{'order':<7} {'term':<16} coefficient")
    for row in table:
        term = _number_term(row["n_a_power"], row["n_b_power"])
        echo(f"{row['order']:<7} {term:<16} {row['coefficient']}")

    report = {"filter": mode, "terms": table}
    files = ["averaging.txt", "averaging.json"]
    if mode == "neglect-w-products":
        ref_first, ref_second = closed_form_effective_terms()
        ok = res.first == ref_first and res.second == ref_second
        report["matches_reference"] = ok
        write_json(out / "averaging.json", report)
        echo("PASS" if ok else "FAIL")
        if not ok:
            raise NumericalFailure("averaged Hamiltonian differs from the closed-form reference")
    else:
        write_json(out / "averaging.json", report)
    return files


def _number_term(i: int, j: int) -> str:
    parts = []
    for name, e in (("n_a", i), ("n_b", j)):
        if e:
            parts.append(name if e == 1 else f"{name}^{e}")
    return " ".join(parts) or "1"


def run_dynamics(cfg: dict, out: Path, threads: int, echo) -> list[str]:
    from .fock import (FockSpace, LindbladSpec, build_effective_hamiltonian, coherent_amplitudes,
                       effective_vs_full, fock_vector, integrate_master, product_state,
                       top_level_populations)

    p = physical_from(cfg)
    dyn = cfg.get("dynamics")
    if dyn is None:
        raise ConfigError("missing 'dynamics' block")
    sp = FockSpace(dyn["dim_a"], dyn["dim_b"])
    init = dyn.get("initial") or {}
    beta = complex(*init.get("beta", [0.0, 0.0]))
    if "fock_a" in init:
        if "alpha" in init:
            raise ConfigError("initial: give either alpha or fock_a")
        if init["fock_a"] >= sp.dim_a:
            raise ConfigError("initial: fock_a outside the truncation")
        psi_a = fock_vector(init["fock_a"], sp.dim_a)
    else:
        psi_a = coherent_amplitudes(complex(*init.get("alpha", [0.0, 0.0])), sp.dim_a)
        psi_a = psi_a / np.linalg.norm(psi_a)
    psi_b = coherent_amplitudes(beta, sp.dim_b)
    psi0 = product_state(psi_a, psi_b / np.linalg.norm(psi_b))

    mode = dyn.get("mode", "master")
    T = dyn["duration"]
    if mode == "full-vs-effective":
        res = effective_vs_full(p, sp, psi0, T, dyn.get("steps_per_period", 64))
        summary = {
            "mode": mode,
            "duration": T,
            "infidelity": res["infidelity"],
            "top_level_full": top_level_populations(res["psi_full"], sp),
            "top_level_effective": top_level_populations(res["psi_eff"], sp),
        }
        write_json(out / "full_vs_effective.json", summary)
        echo(f"infidelity {float(res['infidelity'])!r}")
        return ["full_vs_effective.json"]

    d = drive_from(cfg, p)
    ep = derive_effective(p, d)
    ang = p.angular()
    H = build_effective_hamiltonian(ep, d, sp)
    L = LindbladSpec(ang["kappa"], ang["gamma"], p.n_bar())
    dt = dyn.get("dt", T / 1000.0)
    traj = integrate_master(psi0, H, L, sp, T, dt, method=dyn.get("method", "rk4"),
                            samples=dyn.get("samples"), rtol=dyn.get("rtol", 1e-10),
                            atol=dyn.get("atol", 1e-12),
                            positivity_tol=dyn.get("positivity_tol", 1e-6))
    traj.to_csv(out / "trajectory.csv")
    write_json(out / "trajectory.json", {
        "mode": mode,
        "columns": list(traj.CSV_COLUMNS),
        "max_trace_error": float(np.max(traj.trace_error)),
        "top_level": traj.top_level,
        "truncation_ok": traj.truncation_ok,
    })
    echo(f"{len(traj.times)} samples, max trace error {float(np.max(traj.trace_error))!r}")
    return ["trajectory.csv", "trajectory.json"]


def run_steady_sweep(cfg: dict, out: Path, threads: int, echo) -> list[str]:
    from .steady import detuning_sweep, hysteresis_sweep, hysteresis_window

    p = physical_from(cfg)
    d = drive_from(cfg, p)
    sw = cfg.get("steady_sweep")
    if sw is None:
        raise ConfigError("missing 'steady_sweep' block")
    ang = p.angular()
    kappa, gamma, Omega = ang["kappa"], ang["gamma"], ang["Omega"]
    ep0 = derive_effective(p, d)
    g = sw["grid"]
    grid = np.linspace(g["start"], g["stop"], g["num"])
    if g["num"] > 1 and g["start"] == g["stop"]:
        raise ConfigError("steady_sweep/grid: start and stop coincide")
    variable = sw["variable"]
    scale = gamma if variable == "eta" else Omega
    values = grid * scale
    chis = sw.get("chi_ab_tilde")
    lines = [(i, x) for i, x in enumerate(chis)] if chis else [(0, None)]
    directions = sw.get("directions", ["up", "down"])
    pinned = sw.get("pinned_n_a")

    def one(job):
        (i, x), direction = job
        ep = ep0 if x is None else ep0.with_chi_ab(x * TWO_PI * CHI_AB_UNIT_HZ)
        if variable == "eta":
            tr = hysteresis_sweep(ep, kappa, gamma, d.cavity_amp, values, direction, pinned)
        else:
            tr = detuning_sweep(ep, kappa, gamma, d.cavity_amp, d.mech_amp, values, direction,
                                pinned)
        return i, x, direction, tr

    jobs = [(line, direction) for line in lines for direction in directions]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(one, jobs))

    files = []
    by_line: dict[int, dict] = {}
    for i, chi, direction, tr in results:
        stem = f"sweep_{variable}_line{i}_{direction}"
        ordered = np.sort(grid) if direction == "up" else np.sort(grid)[::-1]
        rows = [(float(v), *r[1:]) for v, r in zip(ordered, tr.rows())]
        write_csv(out / f"{stem}.csv", tr.CSV_COLUMNS, rows)
        side = tr.sidecar()
        for v, pt in zip(ordered, side["points"]):
            pt["sweep_var"] = float(v)
        for j in side["jumps"]:
            j["location"] = j["location"] / scale
        side.update({"chi_ab_tilde": chi, "sweep_unit": "eta/gamma" if variable == "eta"
                     else "delta/Omega", "pinned_n_a": pinned})
        write_json(out / f"{stem}.json", side)
        files += [f"{stem}.csv", f"{stem}.json"]
        by_line.setdefault(i, {"chi_ab_tilde": chi})[direction] = tr
        echo(f"line {i} chi_ab_tilde={chi!r} {direction}: {len(tr.jumps)} jump(s) at "
             + ", ".join(repr(float(j.location / scale)) for j in tr.jumps))

    summary = []
    for i in sorted(by_line):
        entry = by_line[i]
        row = {"line": i, "chi_ab_tilde": entry["chi_ab_tilde"]}
        for direction in ("up", "down"):
            if direction in entry:
                row[f"{direction}_jumps"] = [float(j.location / scale) for j in entry[direction].jumps]
        if "up" in entry and "down" in entry:
            w = hysteresis_window(entry["up"], entry["down"])
            row["window"] = None if w is None else float(w / scale)
        summary.append(row)
    write_json(out / "sweep_summary.json", {"variable": variable, "lines": summary})
    files.append("sweep_summary.json")
    return files


def run_cat(cfg: dict, out: Path, threads: int, echo) -> list[str]:
    from .cats import CoherentSpec, coherence_times, purity_curve, revival_analysis

    c = cfg.get("cat")
    if c is None:
        raise ConfigError("missing 'cat' block")
    spec = CoherentSpec(complex(*c["alpha"]), complex(*c["beta"]))
    chi_ab = c.get("chi_ab", 1.0)
    dim = c.get("dim")
    report = {"alpha": spec.alpha, "beta": spec.beta, "chi_ab": chi_ab, "revivals": []}
    for ratio in c.get("ratios", [1.0, 0.5, 0.25]):
        r = revival_analysis(spec, ratio, chi_ab=chi_ab, chi_b=c.get("chi_b"), dim=dim)
        report["revivals"].append({"ratio": ratio, **r.__dict__})
        echo(f"ratio {ratio!r}: F(+a)={r.fidelity_plus_alpha!r} F(-a)={r.fidelity_minus_alpha!r} "
             f"F(cat)={r.fidelity_ys_cat!r} purity={r.purity!r}")
    files = ["cat_report.json"]
    if cfg.get("physical"):
        p = physical_from(cfg)
        ang = p.angular()
        if ang["kappa"] > 0 and ang["gamma"] > 0:
            report["coherence_times"] = coherence_times(p, spec).__dict__
    if "purity_times" in c:
        g = c["purity_times"]
        ts = np.linspace(g["start"], g["stop"], g["num"])
        ratio = c.get("ratios", [1.0])[0]
        pur = purity_curve(spec, ratio * chi_ab, chi_ab, ts, dim=dim)
        write_csv(out / "purity.csv", ("t", "purity"), zip(ts, pur))
        files.append("purity.csv")
    write_json(out / "cat_report.json", report)
    return files


RUNNERS = {
    "verify-averaging": run_verify_averaging,
    "dynamics": run_dynamics,
    "steady-sweep": run_steady_sweep,
    "cat": run_cat,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="optokerr", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="workflow", required=True)
    for name in WORKFLOWS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file", required=name != "verify-averaging")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (overrides ${THREADS_ENV})")
    return ap


def _numeric_errors():
    from .fock import NormDriftError, PositivityError
    from .steady import NoStableBranch

    return (NormDriftError, PositivityError, NoStableBranch, NumericalFailure,
            FloatingPointError, np.linalg.LinAlgError, RuntimeError, ArithmeticError)


def run(argv=None, echo=print) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    cfg: dict = {}
    try:
        cfg = load_config(args.config, args.workflow)
        threads = resolve_threads(args.threads, cfg)
        out.mkdir(parents=True, exist_ok=True)
        files = RUNNERS[args.workflow](cfg, out, threads, echo)
        write_manifest(out, cfg, args.workflow, files)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _numeric_errors() as exc:
        diag = {
            "workflow": args.workflow,
            "error": type(exc).__name__,
            "message": str(exc),
            "config_sha256": config_hash(cfg),
            "artifact_version": __version__,
        }
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "diagnostic.json", diag)
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
