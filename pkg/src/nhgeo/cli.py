"""Command-line front end: ``nhgeo integrate|compare|sweep-delta|split|torsion``.

Every verb reads one JSON config (see docs/config.md).  Exit codes: 0 success,
1 numerical failure, 2 config error, 3 model error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .connection import torsion_data
from .errors import (
    ConfigError,
    ExprEvalError,
    ExprSyntaxError,
    IntegrationError,
    LeviNotSurjectiveError,
    ModelError,
    NhgeoError,
    SingularFrameError,
    SingularSplittingError,
)
from .extremal import ExtremalState, vector_field
from .geometry import FramedGeometry, frame_data
from .hamiltonian import run_oracle
from .integrate import IntegratorConfig, Trajectory, integrate
from .models import MODEL_IDS, ModelSpec, build
from .splitting import build_injj_matrix, solve_canonical_splitting

log = logging.getLogger("nhgeo")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_MODEL = 0, 1, 2, 3
DEFAULT_DELTAS = (1e-1, 1e-2, 1e-3)

_INTEGRATOR_KEYS = {"method", "dt", "rel_tol", "abs_tol", "t_end", "sample_count"}
_TOP_KEYS = {"model", "initial", "integrator", "output", "deltas", "point", "q_metric", "sample_count"}


@dataclass(frozen=True)
class RunConfig:
    geometry: FramedGeometry
    model_label: str
    state: ExtremalState
    integrator: IntegratorConfig
    out: str | None
    fmt: str
    raw: dict

    @property
    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# -- config loading -----------------------------------------------------------


def read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path!r}: {exc.strerror}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config: not UTF-8 (byte offset {exc.start})") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ConfigError(f"config: malformed JSON at byte offset {offset}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be a JSON object")
    return cfg


def _vector(value, name: str, length: int | None = None) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"{name}: must be a list of numbers")
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: entries must be finite")
    if length is not None and arr.size != length:
        raise ConfigError(f"{name}: expected {length} entries, got {arr.size}")
    return arr


def parse_point(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--point: cannot parse {text!r} as comma-separated numbers") from None


def load_geometry(model) -> tuple[FramedGeometry, str]:
    """Built-in model (id string or object) or a custom frame definition."""
    if isinstance(model, str):
        model = {"id": model}
    if not isinstance(model, dict) or "id" not in model:
        raise ConfigError("model: must be a model id or an object with an 'id' field")
    mid = model["id"]
    if mid == "custom":
        unknown = set(model) - {"id", "X", "Z", "gram_D", "gram_Q", "coord_names", "name"}
        if unknown:
            raise ConfigError(f"model: unknown field(s) {sorted(unknown)}")
        for key in ("X", "Z"):
            if not isinstance(model.get(key), list):
                raise ConfigError(f"model.{key}: required list of frame fields")
        G = FramedGeometry.from_sources(
            model["X"],
            model["Z"],
            gram_D=model.get("gram_D"),
            gram_Q=model.get("gram_Q"),
            coord_names=model.get("coord_names"),
            name=model.get("name", "custom"),
        )
        return G, G.name
    if mid not in MODEL_IDS:
        raise ConfigError(f"model.id: unknown model {mid!r}; expected one of {', '.join(MODEL_IDS + ('custom',))}")
    unknown = set(model) - {"id", "n", "lam", "complement"}
    if unknown:
        raise ConfigError(f"model: unknown field(s) {sorted(unknown)}")
    n = model.get("n", 2)
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigError("model.n: must be an integer")
    lam = model.get("lam", "1")
    if not isinstance(lam, (str, int, float)) or isinstance(lam, bool):
        raise ConfigError("model.lam: must be an expression string or a number")
    spec = ModelSpec(mid, n=n, lam=str(lam), complement=model.get("complement", "normalized"))
    return build(spec), spec.label


def load_run(args, need_state: bool = True) -> RunConfig:
    raw = read_config(args.config)
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    if getattr(args, "model", None):
        model = raw.get("model")
        if isinstance(model, dict) and model.get("id") != "custom":
            raw["model"] = {**model, "id": args.model}
        else:
            raw["model"] = args.model
    if "model" not in raw:
        raise ConfigError("model: required")
    G, label = load_geometry(raw["model"])

    init = raw.get("initial", {})
    if not isinstance(init, dict):
        raise ConfigError("initial: must be an object")
    unknown = set(init) - {"x0", "alpha0", "nu0"}
    if unknown:
        raise ConfigError(f"initial: unknown field(s) {sorted(unknown)}")
    alpha_default = np.zeros(G.n)
    alpha_default[0] = 1.0
    x0 = _vector(init["x0"], "initial.x0", G.m) if "x0" in init else np.zeros(G.m)
    a0 = _vector(init["alpha0"], "initial.alpha0", G.n) if "alpha0" in init else alpha_default
    n0 = _vector(init["nu0"], "initial.nu0", G.l) if "nu0" in init else np.ones(G.l)

    icfg = raw.get("integrator", {})
    if not isinstance(icfg, dict):
        raise ConfigError("integrator: must be an object")
    unknown = set(icfg) - _INTEGRATOR_KEYS
    if unknown:
        raise ConfigError(f"integrator: unknown field(s) {sorted(unknown)}")
    try:
        integ = IntegratorConfig(**icfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from None

    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("output: must be an object")
    path = getattr(args, "out", None) or out.get("path")
    fmt = getattr(args, "format", None) or out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format: must be 'csv' or 'json', got {fmt!r}")
    return RunConfig(G, label, ExtremalState(x0, a0, n0), integ, path, fmt, raw)


# -- output ---------------------------------------------------------------------


def _num(v: float) -> str:
    return repr(float(v))


def trajectory_columns(G: FramedGeometry) -> list[str]:
    return (
        ["t"]
        + list(G.coord_names)
        + [f"alpha{i + 1}" for i in range(G.n)]
        + [f"nu{a + 1}" for a in range(G.l)]
    )


def trajectory_csv(traj: Trajectory, G: FramedGeometry) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trajectory_columns(G))
    for t, y in zip(traj.times, traj.ys):
        w.writerow([_num(t)] + [_num(v) for v in y])
    return buf.getvalue()


def read_trajectory_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
        log.info("wrote %s", path)


def _meta(run: RunConfig, traj: Trajectory | None = None) -> dict:
    meta = {
        "model": run.model_label,
        "method": run.integrator.method,
        "dt": run.integrator.dt,
        "rel_tol": run.integrator.rel_tol,
        "abs_tol": run.integrator.abs_tol,
        "t_end": run.integrator.t_end,
        "config_hash": run.digest,
    }
    if traj is not None:
        meta["steps"] = traj.meta.get("steps")
    return meta


# -- verbs ----------------------------------------------------------------------


def cmd_integrate(args) -> int:
    run = load_run(args)
    traj = integrate(vector_field(run.geometry), run.state.to_vector(), run.integrator)
    meta = _meta(run, traj)
    if run.fmt == "csv":
        _emit(trajectory_csv(traj, run.geometry), run.out)
        if run.out is not None:
            Path(run.out + ".meta.json").write_text(_dump(meta), encoding="utf-8")
    else:
        doc = {
            "meta": meta,
            "columns": trajectory_columns(run.geometry),
            "rows": [[float(t)] + [float(v) for v in y] for t, y in zip(traj.times, traj.ys)],
        }
        _emit(_dump(doc), run.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    run = load_run(args)
    samples = run.raw.get("sample_count", run.integrator.sample_count or 201)
    if not isinstance(samples, int) or samples < 2:
        raise ConfigError("sample_count: must be an integer >= 2")
    rep = run_oracle(run.geometry, run.state, run.integrator, samples)
    doc = {"meta": _meta(run), **rep.as_dict()}
    _emit(_dump(doc), run.out)
    return EXIT_OK


def sweep_delta(G: FramedGeometry, state: ExtremalState, cfg: IntegratorConfig, deltas, samples: int = 201) -> dict:
    """Sup distance of the coordinate projection to the δ = 0 trajectory, per δ.

    The initial covector (α, ν) is shared by all δ, so the complement velocity
    at t = 0 is δ·ν♯.
    """
    from .hamiltonian import compare

    y0 = state.to_vector()
    base = integrate(vector_field(G), y0, cfg)
    errors = []
    for d in deltas:
        if d == 0:
            errors.append(0.0)
            continue
        traj = integrate(vector_field(G, d), y0, cfg)
        errors.append(compare(base, traj, samples, G.m).max_deviation)
    pos = [(d, e) for d, e in zip(deltas, errors) if d > 0]
    pos.sort(key=lambda p: -p[0])
    monotone = all(b[1] < a[1] for a, b in zip(pos, pos[1:]))
    ratios = [b[1] / a[1] if a[1] > 0 else None for a, b in zip(pos, pos[1:])]
    return {"deltas": list(deltas), "errors": errors, "monotone_decreasing": monotone, "ratios": ratios}


def cmd_sweep_delta(args) -> int:
    run = load_run(args)
    deltas = args.deltas if args.deltas is not None else run.raw.get("deltas", list(DEFAULT_DELTAS))
    if not isinstance(deltas, list) or not deltas or any(
        not isinstance(d, (int, float)) or isinstance(d, bool) or not d >= 0 for d in deltas
    ):
        raise ConfigError("deltas: must be a non-empty list of non-negative numbers")
    samples = run.raw.get("sample_count", 201)
    rep = sweep_delta(run.geometry, run.state, run.integrator, [float(d) for d in deltas], samples)
    _emit(_dump({"meta": _meta(run), **rep}), run.out)
    return EXIT_OK


def _point(args, raw: dict, G: FramedGeometry) -> np.ndarray:
    if getattr(args, "point", None):
        return _vector(parse_point(args.point), "--point", G.m)
    if "point" in raw:
        return _vector(raw["point"], "point", G.m)
    return np.zeros(G.m)


def _model_only(args) -> tuple[FramedGeometry, str, dict]:
    raw = read_config(args.config)
    if args.model:
        model = raw.get("model")
        raw["model"] = {**model, "id": args.model} if isinstance(model, dict) and model.get("id") != "custom" else args.model
    if "model" not in raw:
        raise ConfigError("model: required (config or --model)")
    G, label = load_geometry(raw["model"])
    return G, label, raw


def cmd_split(args) -> int:
    G, label, raw = _model_only(args)
    x = _point(args, raw, G)
    q_metric = raw.get("q_metric", "canonical")
    if q_metric not in ("canonical", "declared"):
        raise ConfigError("q_metric: must be 'canonical' or 'declared'")
    doc = {"model": label, "point": x.tolist(), "q_metric_choice": q_metric}
    try:
        res = solve_canonical_splitting(G, x, q_metric)
    except SingularSplittingError as exc:
        rep = build_injj_matrix(G, x, q_metric)
        doc.update({"error": str(exc), "rank_report": rep.as_dict()})
        _emit(_dump(doc), args.out)
        log.error("%s", exc)
        return EXIT_NUMERIC
    doc.update(res.as_dict())
    _emit(_dump(doc), args.out)
    return EXIT_OK


def cmd_torsion(args) -> int:
    G, label, raw = _model_only(args)
    x = _point(args, raw, G)
    data = frame_data(G, x)
    doc = {
        "model": label,
        "point": x.tolist(),
        "rcond": data.rcond,
        "structure_functions": data.c.tolist(),
        **torsion_data(data).as_dict(),
    }
    _emit(_dump(doc), args.out)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nhgeo", description="Normal sub-Riemannian geodesics in moving frames.")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--config", metavar="PATH", help="JSON run configuration")
        sp.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        sp.add_argument("--model", metavar="ID", help="override the model id of the config")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), help="trajectory output format")

    sp = sub.add_parser("integrate", help="integrate the frame system and write the trajectory")
    common(sp)
    sp.set_defaults(func=cmd_integrate)

    sp = sub.add_parser("compare", help="compare against the coordinate Hamiltonian system")
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep-delta", help="distance of penalized geodesics to the limit, per delta")
    common(sp, fmt=False)
    sp.add_argument("--deltas", type=lambda s: [float(v) for v in s.split(",")], help="comma-separated deltas")
    sp.set_defaults(func=cmd_sweep_delta)

    for name, func, text in (
        ("split", cmd_split, "solve for the canonical complement at a point"),
        ("torsion", cmd_torsion, "print connection and torsion blocks at a point"),
    ):
        sp = sub.add_parser(name, help=text)
        common(sp, fmt=False)
        sp.add_argument("--point", metavar="V1,V2,...", help="coordinates of the point")
        sp.set_defaults(func=func)
    return p


def _setup_logging() -> None:
    level = os.environ.get("NHGEO_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="nhgeo: %(levelname)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (ModelError, ExprSyntaxError) as exc:
        log.error("model error: %s", exc)
        return EXIT_MODEL
    except (IntegrationError, SingularFrameError, ExprEvalError, LeviNotSurjectiveError, SingularSplittingError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except NhgeoError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
