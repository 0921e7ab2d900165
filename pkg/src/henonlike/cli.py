"""Command-line front end.

Every subcommand reads a :class:`~henonlike.config.RunConfig` (from
``--config`` and/or flags) and writes one data file. Exit codes: 0 success,
1 a certificate or verification failed, 2 invalid input. Errors are printed
to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from typing import Optional

import numpy as np

from . import horseshoe as hs
from . import orbits as orb
from . import spectrum as sp
from . import trapping as tr
from .config import COMMANDS, ConfigError, RunConfig, parameter_error_dict
from .map_core import (
    CUBIC,
    ESCAPE_RADIUS,
    POLYNOMIAL,
    QUADRATIC,
    Escaped,
    MapParams,
    Nonlinearity,
    ParameterError,
    State,
    iterate_endpoint,
    jacobian_at,
    step_array,
)

OK, FAILED, INVALID = 0, 1, 2

LABEL_ATTRACTOR = "attractor-certified"
LABEL_HORSESHOE = "horseshoe-certified"
LABEL_NONE = "none"
LABEL_ESCAPED = "escaped"


class InputError(ValueError):
    """Invalid input that is not tied to a single config field."""


# ---------------------------------------------------------------- output


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([_cell(v) for v in r] for r in rows)
    return buf.getvalue()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2) + "\n"


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _table_or_doc(cfg: RunConfig, header, rows, doc: dict) -> str:
    if cfg.format == "csv":
        return csv_text(header, rows)
    return json_text({"columns": list(header), "rows": [list(r) for r in rows], **doc})


def _flat(d: dict, prefix: str = "") -> list:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flat(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out.append((key, json.dumps(_plain(v))))
        else:
            out.append((key, v))
    return out


def _state_columns(n: int) -> list:
    return ["x"] + [f"y{i}" for i in range(1, n + 1)]


# -------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig) -> int:
    """Attractor cloud with a running largest-Lyapunov-exponent column
    (Benettin tangent iteration, diagnostic only)."""
    p = cfg.params()
    o = cfg.opts
    transient, points = int(o["transient"]), int(o["points"])
    if transient < 0 or points < 1:
        raise ConfigError("need transient >= 0 and points >= 1", field="options",
                          constraint="transient >= 0 and points >= 1", value=[transient, points])
    rng = np.random.default_rng(cfg.seed)
    d = tr.certified_domain(p)
    if o["x0"] is not None:
        z = np.asarray(o["x0"], dtype=float)
        if z.shape != (p.dim,):
            raise ConfigError(f"x0 must have {p.dim} entries", field="options.x0",
                              constraint=f"len(x0) == {p.dim}", value=o["x0"])
    elif d is not None:
        z = tr.sample_box(p, d, 1, rng)[0]
    else:
        z = np.concatenate(([rng.uniform(-0.1, 0.1)], 0.01 * rng.uniform(-1, 1, p.n) * abs(p.b)))
    v = rng.standard_normal(p.dim)
    v /= np.linalg.norm(v)

    rows = np.empty((points, p.dim + 1))
    log_sum = 0.0
    escaped_at = None
    for t in range(1, transient + points + 1):
        J = jacobian_at(p, z[0])
        z = step_array(p, z[None, :])[0]
        v = J @ v
        nv = float(np.linalg.norm(v))
        if not (np.all(np.isfinite(z)) and abs(z[0]) <= ESCAPE_RADIUS
                and np.abs(z[1:]).sum() <= ESCAPE_RADIUS):
            escaped_at = t
            break
        if nv > 0:
            v /= nv
        k = t - transient
        if k >= 1:
            log_sum += math.log(nv) if nv > 0 else -math.inf
            rows[k - 1, : p.dim] = z
            rows[k - 1, p.dim] = log_sum / k
    emitted = rows if escaped_at is None else rows[: max(0, escaped_at - 1 - transient)]
    inside = None
    if d is not None and emitted.shape[0]:
        inside = bool(np.all(d.contains(emitted[:, : p.dim])))
    summary = {
        "points": int(emitted.shape[0]),
        "escaped_at": escaped_at,
        "domain": d.to_dict() if d is not None else None,
        "stayed_in_domain": inside,
        "lyapunov_estimate": float(emitted[-1, -1]) if emitted.shape[0] else None,
    }
    header = _state_columns(p.n) + ["lle_running"]
    _emit(_table_or_doc(cfg, header, emitted.tolist(), {"summary": summary}), cfg.out)
    if cfg.format == "csv":
        sys.stderr.write(json.dumps(_plain(summary)) + "\n")
    if escaped_at is not None:
        err = Escaped(escaped_at, [])
        sys.stderr.write(json.dumps({"error": "escaped", "step_index": err.step_index,
                                     "message": str(err)}) + "\n")
        return FAILED
    return FAILED if inside is False else OK


def _certify_domain(p: MapParams, o: dict) -> Optional[tr.TrappingDomain]:
    am, ap = o["alpha_minus"], o["alpha_plus"]
    if (am is None) != (ap is None):
        raise ConfigError("give both alpha_minus and alpha_plus", field="options",
                          constraint="alpha_minus and alpha_plus set together", value=[am, ap])
    if am is not None:
        return tr.theorem1_domain(p, float(am), float(ap))
    if p.f.canonical().kind == POLYNOMIAL:
        raise ConfigError("polynomial f needs alpha_minus and alpha_plus", field="options",
                          constraint="alpha_minus and alpha_plus set for polynomial f")
    return tr.certified_domain(p)


def cmd_certify(cfg: RunConfig) -> int:
    p = cfg.params()
    o = cfg.opts
    d = _certify_domain(p, o)
    report = {"map": p.to_dict(), "domain": None, "passed": False}
    if d is not None:
        samples = int(o["samples"])
        lem = tr.lemma1_check(p, d, samples, cfg.seed)
        sw = tr.sandwich_check(p, d, samples, cfg.seed)
        ora = tr.brute_force_trap_oracle(p, d, int(o["grid_density"]), int(o["iterations"]),
                                         int(o["workers"]))
        report.update({
            "domain": d.to_dict(),
            "lemma1": lem.to_dict(),
            "sandwich": sw.to_dict(),
            "oracle": ora.to_dict(),
            "passed": bool(lem.passed and sw.passed and ora.passed),
        })
    if cfg.format == "csv":
        text = csv_text(["key", "value"], _flat(_plain(report)))
    else:
        text = json_text(report)
    _emit(text, cfg.out)
    return OK if report["passed"] else FAILED


def cmd_horseshoe(cfg: RunConfig) -> int:
    """Covering report (JSON, or key/value CSV) plus image arcs as CSV.

    Arcs go to ``options.arc_out``, or next to ``--out`` as ``<out>.arcs.csv``.
    """
    p = cfg.params()
    o = cfg.opts
    rep = hs.verify_covering(p, int(o["line_count"]), int(o["points_per_line"]),
                             o["half_width"], o["gamma"])
    doc = {"map": p.to_dict(), **rep.to_dict()}
    if cfg.format == "csv":
        text = csv_text(["key", "value"], _flat(_plain(doc)))
    else:
        text = json_text(doc)
    _emit(text, cfg.out)
    arc_out = o["arc_out"] or (f"{cfg.out}.arcs.csv" if cfg.out else None)
    if arc_out and rep.condition_holds:
        arcs = hs.arc_points(p, int(o["arc_lines"]), int(o["arc_points"]),
                             rep.half_width, rep.gamma)
        rows = [[int(r[0])] + r[1:].tolist() for r in arcs]
        _emit(csv_text(["line", "x", "x_image", "y1_image"], rows), arc_out)
    return OK if rep.covering_verified else FAILED


def _sweep_cell(args) -> list:
    kind, mu, b, a, probe = args
    f = Nonlinearity(kind, mu=mu)
    p = MapParams(f, b, a)
    bound = math.nan
    saddle = math.nan
    h_gamma = math.nan
    label = None
    if mu > 0:
        if kind == QUADRATIC:
            bound = tr.theorem2_bound(b, p.a_bound)
        else:
            bound = tr.theorem3_bound(mu, p.a_bound)
            saddle = tr.cubic_saddle_node_curve(mu, p.a_bound)
        if tr.certified_domain(p) is not None:
            label = LABEL_ATTRACTOR
        elif kind == QUADRATIC:
            h_gamma = hs.horseshoe_gamma(p)
            if hs.horseshoe_condition(mu, h_gamma):
                label = LABEL_HORSESHOE
    if label is None:
        try:
            iterate_endpoint(p, State(0.0, np.zeros(p.n)), probe)
            label = LABEL_NONE
        except Escaped:
            label = LABEL_ESCAPED
    if kind == QUADRATIC and mu > 0 and math.isnan(h_gamma):
        h_gamma = hs.horseshoe_gamma(p)
    return [mu, b, label, bound, h_gamma, saddle]


def cmd_sweep(cfg: RunConfig) -> int:
    """Region map over a ``(mu, b)`` grid, ``mu``-major order.

    ``certificate_bound`` is the largest ``mu`` at this ``b`` (quadratic) or
    the largest ``|b|`` at this ``mu`` (cubic).
    """
    o = cfg.opts
    kind = cfg.map.get("kind", QUADRATIC)
    if kind not in (QUADRATIC, CUBIC):
        raise ConfigError("sweep needs a quadratic or cubic map", field="map.kind",
                          constraint="kind in ('quadratic', 'cubic')", value=kind)
    mus = np.linspace(float(o["mu_min"]), float(o["mu_max"]), int(o["mu_count"]))
    bs = np.linspace(float(o["b_min"]), float(o["b_max"]), int(o["b_count"]))
    for b in (bs[0], bs[-1]):
        if not abs(b) < 1:
            raise ParameterError(f"|b| = {abs(b)} must be < 1", constraint="|b| < 1",
                                 field="b", value=float(b))
    a = tuple(float(v) for v in cfg.map.get("a", ()))
    MapParams(Nonlinearity(kind, mu=float(mus[0])), float(bs[0]), a)
    tasks = [(kind, float(mu), float(b), a, int(o["probe_iterations"])) for mu in mus for b in bs]
    workers = int(o["workers"])
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_sweep_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        rows = [_sweep_cell(t) for t in tasks]
    header = ["mu", "b", "label", "certificate_bound", "horseshoe_gamma", "saddle_node_b"]
    _emit(_table_or_doc(cfg, header, rows, {"map": {"kind": kind, "a": list(a)}}), cfg.out)
    return OK


def read_orbit_file(path: str, dim: int) -> list:
    """States from a CSV file with columns ``x, y1, ..., yn`` (header
    optional, extra columns ignored) or a JSON list of rows."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] and rows[0][0].strip() == "x":
            rows = rows[1:]
    try:
        Z = np.array([[float(v) for v in r[:dim]] for r in rows if r], dtype=float)
    except (ValueError, TypeError) as e:
        raise InputError(f"bad orbit file: {e}") from e
    if Z.ndim != 2 or Z.shape[1] != dim or Z.shape[0] == 0:
        raise InputError(f"orbit file must hold rows of {dim} numbers")
    return [State.from_array(z) for z in Z]


def cmd_spectrum(cfg: RunConfig) -> int:
    p = cfg.params()
    o = cfg.opts
    if (o["x"] is None) == (o["orbit_file"] is None):
        raise ConfigError("give exactly one of x and orbit_file", field="options",
                          constraint="exactly one of x, orbit_file")
    if o["x"] is not None:
        x = float(o["x"])
        closed = sp.char_poly_at(p, x, sp.Construction.CLOSED_FORM)
        det = sp.char_poly_at(p, x, sp.Construction.DETERMINANT)
        roots = sp.eigenvalues(closed)
        cond = sp.root_conditions(closed, roots)
        doc = {"map": p.to_dict(), "x": x, "closed_form": closed.coeffs,
               "determinant": det.coeffs,
               "roots": [{"re": r.real, "im": r.imag, "modulus": abs(r), "condition": c}
                         for r, c in zip(roots, cond)]}
        rows = [[r.real, r.imag, abs(r), c] for r, c in zip(roots, cond)]
        header = ["re", "im", "modulus", "condition"]
    else:
        pts = read_orbit_file(o["orbit_file"], p.dim)
        try:
            spec = sp.orbit_multipliers(p, pts)
        except sp.NotACycleError as e:
            raise InputError(str(e)) from e
        doc = {"map": p.to_dict(), "period": len(pts), "m_x": spec.m_x,
               "residual": sp.cycle_residual(p, pts),
               "multipliers": [{"re": r.real, "im": r.imag, "modulus": abs(r)}
                               for r in spec.multipliers]}
        rows = [[r.real, r.imag, abs(r), None] for r in spec.multipliers]
        header = ["re", "im", "modulus", "condition"]
    if cfg.format == "csv":
        text = csv_text(header, rows)
    else:
        text = json_text(doc)
    _emit(text, cfg.out)
    return OK


def cmd_continue(cfg: RunConfig) -> int:
    """Continue a ``b = 0`` orbit of the reduced map to ``b_target``.

    One row per orbit point and continuation step.
    """
    p = cfg.params()
    o = cfg.opts
    b_target = p.b if o["b_target"] is None else float(o["b_target"])
    p0 = p.replace(b=0.0)
    period = int(o["period"])
    found = orb.find_1d_orbits(p.f, period, o["interval"], n=p.n)
    o0 = orb.find_orbit(found, period, o["near"])
    code = OK
    error = None
    try:
        history = orb.continue_in_b(p0, o0, b_target, int(o["steps"]))
    except orb.ContinuationError as e:
        history, code = e.history, FAILED
        error = {"error": "continuation_failed", "message": str(e)}
    except ValueError as e:
        history, code = [o0], FAILED
        error = {"error": "not_continuable", "message": str(e)}
    header = (["b", "period", "residual", "point"] + _state_columns(p.n)
              + [f"multiplier_modulus_{i}" for i in range(1, p.dim + 1)])
    rows = []
    for orbit in history:
        moduli = np.sort(np.abs(orbit.multipliers))[::-1].tolist()
        for i, s in enumerate(orbit.points):
            rows.append([orbit.b_value, orbit.period, orbit.residual, i, s.x, *s.y.tolist(), *moduli])
    _emit(_table_or_doc(cfg, header, rows, {"error": error}), cfg.out)
    if error:
        sys.stderr.write(json.dumps(error) + "\n")
    return code


COMMAND_FUNCS = {
    "simulate": cmd_simulate,
    "certify": cmd_certify,
    "horseshoe": cmd_horseshoe,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "continue": cmd_continue,
}


# ------------------------------------------------------------- arguments


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "invalid_arguments", "message": message}) + "\n")
        raise SystemExit(INVALID)


def _floats(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    return [float(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="henonlike", description="Henon-like maps: certificates, "
                     "horseshoes, spectra and orbit continuation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name, help=(COMMAND_FUNCS[name].__doc__ or name).split("\n")[0])
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--kind", choices=[QUADRATIC, CUBIC, POLYNOMIAL])
        s.add_argument("--mu", type=float)
        s.add_argument("--b", type=float)
        s.add_argument("--a", type=_floats, help="comma-separated a_i (empty for n = 1)")
        s.add_argument("--coeffs", type=_floats, help="polynomial coefficients, lowest first")
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--format", choices=["csv", "json"])
        s.add_argument("--option", "-o", action="append", default=[], metavar="KEY=VALUE",
                       help="command option; VALUE is parsed as JSON when possible")
    return parser


def config_from_args(ns) -> RunConfig:
    cfg = RunConfig.load(ns.config, ns.command) if ns.config else RunConfig(ns.command)
    m = dict(cfg.map)
    for key in ("kind", "mu", "b", "a", "coeffs"):
        v = getattr(ns, key)
        if v is not None:
            m[key] = v
    options = dict(cfg.options)
    for item in ns.option:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"option {item!r} is not KEY=VALUE", field="options",
                              constraint="KEY=VALUE", value=item)
        try:
            options[key] = json.loads(raw)
        except json.JSONDecodeError:
            options[key] = raw
    return RunConfig(
        command=ns.command,
        map=m,
        seed=cfg.seed if ns.seed is None else ns.seed,
        out=cfg.out if ns.out is None else ns.out,
        format=cfg.format if ns.format is None else ns.format,
        options=options,
    )


def run(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        cfg.params()
        return COMMAND_FUNCS[cfg.command](cfg)
    except ConfigError as e:
        err = e.to_dict()
    except ParameterError as e:
        err = parameter_error_dict(e)
    except hs.UndersampledError as e:
        err = {"error": "undersampled", "message": str(e), "suggested": e.suggested}
    except (ValueError, LookupError, OSError) as e:
        err = {"error": "invalid_input", "message": str(e)}
    sys.stderr.write(json.dumps(_plain(err)) + "\n")
    return INVALID


def main(argv=None):
    raise SystemExit(run(argv))


if __name__ == "__main__":
    main()
