"""``weylscope`` command line: analyze, verify and catalog.

Exit codes: 0 when every selected check passes, 1 when some check fails,
2 on usage, input or numerical errors.
"""

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, catalog, conditions, decomp
from .errors import DegenerateEigenvectorError, WeylscopeError
from .parser import load_metric_file
from .tensor import metric_batch

OUT_OF_SCOPE = (
    "global dichotomy of the classification theorems, double-cover construction, "
    "Hitchin's classification and the K3 branch are not verifiable on a chart"
)
UNITS = {"curvature": "inverse squared chart length", "coordinates": "chart units"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    target: str = None
    grid: int = 5
    tol_algebraic: float = conditions.TOL_ALGEBRAIC
    tol_fd: float = conditions.TOL_FD
    orientation: int = 1
    conditions: tuple = conditions.ALGEBRAIC_CONDITIONS
    format: str = "text"
    workers: int = 1
    seed: int = 0
    out: str = None
    points: int = 10
    samples: int = 100_000
    per_point: bool = False

    @property
    def tolerances(self):
        return conditions.Tolerances(algebraic=self.tol_algebraic, fd=self.tol_fd)


# -- target resolution ---------------------------------------------------------

def resolve_target(target, orientation):
    """Return ``(patch, entry_or_None, header)`` for a catalog name or file path."""
    if target in catalog.NAMES:
        entry = catalog.load(target)
        patch = entry.patch.with_orientation(orientation)
        text = entry.source
        kind = "catalog"
    elif os.path.exists(target):
        patch = load_metric_file(target)
        if orientation != 1:
            patch = patch.with_orientation(-patch.orientation)
        entry, text, kind = None, patch.source, "file"
    else:
        raise catalog.UnknownEntryError(
            f"{target!r} is neither a catalog entry ({', '.join(catalog.NAMES)}) nor a readable file"
        )
    digest = hashlib.sha256(f"{patch.name}\n{text}".encode()).hexdigest()[:16]
    return patch, entry, {"name": patch.name, "kind": kind, "hash": digest}


def _header(cfg, target, patch):
    return {
        "tool": "weylscope",
        "version": __version__,
        "command": cfg.command,
        "target": target,
        "orientation": int(patch.orientation),
        "tolerances": {"algebraic": cfg.tol_algebraic, "fd": cfg.tol_fd},
        "units": UNITS,
        "caveat": conditions.CAVEAT,
        "out_of_scope": OUT_OF_SCOPE,
    }


# -- analyze -------------------------------------------------------------------

def cmd_analyze(cfg):
    patch, entry, target = resolve_target(cfg.target, cfg.orientation)
    report = conditions.grid_sweep(
        patch, cfg.grid, cfg.conditions, cfg.tolerances, workers=cfg.workers,
        keep_points=cfg.per_point or cfg.format == "csv",
    )
    doc = _header(cfg, target, patch)
    doc.update({
        "grid": {"resolution": cfg.grid, "points": report.n_points},
        "conditions": {k: v.to_dict() for k, v in report.conditions.items()},
        "scalar_curvature": {"min": report.scalar_range[0], "max": report.scalar_range[1]},
        "wplus_spectrum": [{"min": lo, "max": hi} for lo, hi in report.spectrum_range],
        "classification": report.classification,
        "passed": report.passed,
    })
    if entry is not None:
        doc["ground_truth"] = entry.ground_truth()
    if cfg.per_point and report.per_point is not None:
        doc["per_point"] = _rows(report)
    return doc, (0 if report.passed else 1), report


def _rows(report):
    data, x = report.per_point, report.points
    names = [c for c in report.conditions]
    rows = []
    for i in range(len(x)):
        row = {f"x{k + 1}": float(x[i, k]) for k in range(4)}
        row["S"] = float(data["scalar"][i])
        for k in range(3):
            row[f"lambda{k + 1}"] = float(data["lambda"][i, k])
        for n in names:
            row[n] = float(data[n][i])
        rows.append(row)
    return rows


# -- verify --------------------------------------------------------------------

def algebraic_sweeps(rng, samples, tol):
    """Random-sample checks of the pointwise identities; returns name -> record."""
    out = {}
    a = rng.uniform(-1.0, 1.0, size=(samples, 3))
    lam = np.sort(a - a.mean(axis=1, keepdims=True), axis=1)
    S = rng.uniform(-24.0, 24.0, size=samples)
    scale = np.maximum(np.abs(lam).max(axis=1), np.abs(S) / 12.0) ** 2
    d = np.abs(decomp.eigenvalue_inequality_identity(lam, S)) / scale
    out["eigenvalue_inequality_identity"] = _rec(float(d.max()), tol, samples)
    worst = 0.0
    for which in ("lambda1", "lambda3"):
        u, f = decomp.root_factorization(lam[:, 0 if which == "lambda1" else 2], S, which)
        worst = max(worst, float((np.abs(u - f) / scale).max()))
    out["root_factorization"] = _rec(worst, tol, samples)
    n = min(samples, 1000)
    w = rng.uniform(-1.0, 1.0, size=(n, 3, 3))
    w = 0.5 * (w + w.transpose(0, 2, 1))
    w -= (np.trace(w, axis1=1, axis2=2) / 3.0)[:, None, None] * np.eye(3)
    Sw = rng.uniform(-24.0, 24.0, size=n)
    f1 = decomp._weitzenbock_first(w, Sw[:, None, None])
    f2 = decomp._weitzenbock_second(w, Sw[:, None, None])
    size = np.maximum(np.abs(Sw) * np.linalg.norm(w, axis=(1, 2)), np.linalg.norm(w, axis=(1, 2)) ** 2)
    out["weitzenbock_forms_agree"] = _rec(float((np.linalg.norm(f1 - f2, axis=(1, 2)) / size).max()), 1e-12, n)
    pic = conditions.half_pic_margin(lam, S) >= 0
    mid = conditions.middle_eigenvalue_margin(lam, S) >= 0
    bad = int(np.sum(pic & ~mid))
    out["half_pic_implies_middle_eigenvalue"] = {"counterexamples": bad, "samples": samples, "passed": bad == 0}
    return out


def _rec(value, tol, n):
    return {"max_relative": value, "tolerance": tol, "samples": n, "passed": bool(value < tol)}


def _sample_points(patch, n, seed, depth):
    rng = np.random.default_rng(seed)
    box = patch.domain.shrink(patch.margin(depth) * 1.0001)
    return rng.uniform(box.lower, box.upper, size=(n, 4))


def cmd_verify(cfg):
    patch, entry, target = resolve_target(cfg.target, cfg.orientation)
    tol = cfg.tolerances
    x = _sample_points(patch, cfg.points, cfg.seed, depth=2)
    pw = conditions.pointwise_batch(patch, x)
    wz = [conditions.weitzenbock_residual(patch, xi, tol=tol.fd) for xi in x]
    div = np.array([r.divergence for r in wz])
    wnorm = np.array([r.norm for r in wz])
    applicable = all(r.applicable for r in wz)

    expect_harmonic = None if entry is None else entry.einstein
    if expect_harmonic is None:
        div_pass, div_note = True, "reported only (no ground truth)"
    elif expect_harmonic:
        div_pass, div_note = bool(div.max() < conditions.TOL_FD / 10), "Einstein: delta W+ = 0 expected"
    else:
        div_pass, div_note = bool(div.min() > 1e-2), "negative control: delta W+ != 0 expected"
    checks = {
        "divergence": {"max": float(div.max()), "min": float(div.min()), "passed": div_pass, "note": div_note},
        "weitzenbock": {
            "max": float(wnorm.max()), "tolerance": tol.fd, "applicable": applicable,
            "passed": bool(not applicable or wnorm.max() < tol.fd),
            "note": "" if applicable else "not applicable: delta W+ != 0",
        },
    }

    kahler_like = conditions.kahler_spectrum_residual(pw.eigenvalues, pw.scalar) < tol.fd
    forms, complex_res = [], []
    if np.all(kahler_like) and np.all(np.abs(pw.scalar) > tol.fd):
        for xi in x:
            try:
                field = conditions.eigenform_field(patch, xi)
            except DegenerateEigenvectorError:
                forms = None
                break
            omega = field(xi[None])[0]
            g = metric_batch(patch, xi[None])[0]
            complex_res.append(conditions.check_almost_complex(omega, g))
            forms.append(conditions.kahler_form_parallel(patch, xi, omega_field=field))
    if forms:
        checks["parallel_form"] = {"max": max(forms), "tolerance": tol.fd, "applicable": True,
                                   "passed": bool(max(forms) < tol.fd)}
        checks["almost_complex"] = {"max": max(complex_res), "tolerance": 1e-6, "applicable": True,
                                    "passed": bool(max(complex_res) < 1e-6)}
    else:
        for name in ("parallel_form", "almost_complex"):
            checks[name] = {"applicable": False, "passed": True,
                            "note": "not applicable: no isolated Kaehler-spectrum eigenvalue"}

    rng = np.random.default_rng(cfg.seed)
    sweeps = algebraic_sweeps(rng, cfg.samples, tol.algebraic)
    passed = all(c["passed"] for c in checks.values()) and all(s["passed"] for s in sweeps.values())
    doc = _header(cfg, target, patch)
    doc.update({"points": {"count": int(len(x)), "seed": cfg.seed},
                "residuals": checks, "algebraic": sweeps, "passed": bool(passed)})
    return doc, (0 if passed else 1), None


# -- catalog -------------------------------------------------------------------

def cmd_catalog_list(cfg):
    names = catalog.NAMES if not cfg.target else (cfg.target,)
    entries = []
    for n in names:
        e = catalog.load(n)
        entries.append({"name": e.name, "description": e.description, "domain": {
            "lower": list(e.patch.domain.lower), "upper": list(e.patch.domain.upper)},
            **e.ground_truth()})
    doc = {"tool": "weylscope", "version": __version__, "command": "catalog",
           "caveat": conditions.CAVEAT, "entries": entries}
    return doc, 0, None


# -- rendering -------------------------------------------------------------------

def render_text(doc):
    lines = [f"weylscope {doc['version']} {doc['command']}"]
    if doc["command"] == "catalog":
        for e in doc["entries"]:
            wsp = e["wplus_spectrum"]
            wsp = wsp if isinstance(wsp, str) else "(" + ", ".join(f"{v:.6g}" for v in wsp) + ")"
            S = e["scalar_curvature"]
            S = S if isinstance(S, str) else f"{S:.6g}"
            lines.append(f"  {e['name']:<24} S = {S:<26} W+ = {wsp:<28} Einstein: {e['einstein_constant']}  "
                         f"Kaehler: {'yes' if e['kahler'] else 'no'}")
            lines.append(f"      {e['description']}; provenance: "
                         + "; ".join(f"{k}: {v}" for k, v in sorted(e["provenance"].items())))
        lines.append(f"caveat: {doc['caveat']}")
        return "\n".join(lines) + "\n"
    t = doc["target"]
    lines.append(f"target: {t['name']} ({t['kind']}, hash {t['hash']})   orientation: {doc['orientation']:+d}")
    lines.append(f"tolerances: algebraic {doc['tolerances']['algebraic']:g} (relative), "
                 f"finite-difference {doc['tolerances']['fd']:g} (absolute)")
    if doc["command"] == "analyze":
        lines.append(f"grid: {doc['grid']['resolution']}^4 = {doc['grid']['points']} points")
        sc = doc["scalar_curvature"]
        lines.append(f"scalar curvature: [{sc['min']:.6g}, {sc['max']:.6g}]")
        for name, c in doc["conditions"].items():
            verdict = "PASS" if c["passed"] else "FAIL"
            if not c["applicable"]:
                verdict += f" ({c['note']})"
            if c["value"] is None:
                lines.append(f"  {name:<18} {verdict}")
                continue
            loc = ", ".join(f"{v:.4g}" for v in (c["argmin"] if c["statistic"] == "min" else c["argmax"]))
            line = f"  {name:<18} {c['statistic']} = {c['value']:+.3e}  tol {c['tolerance']:g}  {verdict}  at ({loc})"
            if c["applicable"] and c["note"]:
                line += f"; {c['note']}"
            lines.append(line)
        lines.append(f"classification: {doc['classification']}")
    else:
        lines.append(f"points: {doc['points']['count']} (seed {doc['points']['seed']})")
        for name, c in doc["residuals"].items():
            verdict = "PASS" if c["passed"] else "FAIL"
            value = f"max = {c['max']:.3e}" if "max" in c else ""
            lines.append(f"  {name:<34} {value:<18} {verdict}  {c.get('note', '')}".rstrip())
        for name, c in doc["algebraic"].items():
            verdict = "PASS" if c["passed"] else "FAIL"
            value = (f"counterexamples = {c['counterexamples']}" if "counterexamples" in c
                     else f"max rel = {c['max_relative']:.3e}")
            lines.append(f"  {name:<34} {value:<18} {verdict}  ({c['samples']} samples)")
    lines.append(f"result: {'PASS' if doc['passed'] else 'FAIL'}")
    lines.append(f"caveat: {doc['caveat']}")
    lines.append(f"out of scope: {doc['out_of_scope']}")
    return "\n".join(lines) + "\n"


def render_csv(doc, report):
    buf = io.StringIO()
    if report is None or report.per_point is None:
        raise WeylscopeError("csv output is only available for analyze")
    rows = _rows(report)
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(v) for k, v in r.items()})
    return buf.getvalue()


def render(doc, fmt, report=None):
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        return render_csv(doc, report)
    return render_text(doc)


# -- argument parsing --------------------------------------------------------------

def _orientation(text):
    if text in ("+1", "1"):
        return 1
    if text == "-1":
        return -1
    raise argparse.ArgumentTypeError("orientation must be +1 or -1")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _grid(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("grid resolution must be >= 2")
    return v


def _conditions(text):
    names = tuple(c.strip() for c in text.split(",") if c.strip())
    unknown = [c for c in names if c not in conditions.CONDITIONS]
    if unknown or not names:
        raise argparse.ArgumentTypeError(
            f"unknown condition(s) {', '.join(unknown) or '(none)'}; choose from {', '.join(conditions.CONDITIONS)}"
        )
    return names


def build_parser():
    p = argparse.ArgumentParser(prog="weylscope", description="Curvature decomposition and self-dual Weyl checks on 4-manifold charts.")
    p.add_argument("--version", action="version", version=f"weylscope {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, target_required=True):
        sp.add_argument("target", nargs=None if target_required else "?",
                        help="catalog entry name or metric-definition file")
        sp.add_argument("--tol-algebraic", type=float, default=conditions.TOL_ALGEBRAIC)
        sp.add_argument("--tol-fd", type=float, default=conditions.TOL_FD)
        sp.add_argument("--orientation", type=_orientation, default=1)
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
        sp.add_argument("--workers", type=_positive_int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="write the report here instead of stdout")

    a = sub.add_parser("analyze", help="grid sweep of curvature conditions")
    common(a)
    a.add_argument("--grid", type=_grid, default=5)
    a.add_argument("--conditions", type=_conditions, default=conditions.ALGEBRAIC_CONDITIONS)
    a.add_argument("--per-point", action="store_true", help="include per-point rows in json output")

    v = sub.add_parser("verify", help="differential and algebraic identity suite")
    common(v)
    v.add_argument("--points", type=_positive_int, default=10)
    v.add_argument("--samples", type=_positive_int, default=100_000)

    c = sub.add_parser("catalog", help="list built-in reference metrics")
    c.add_argument("target", nargs="?", default=None)
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("--out", default=None)
    return p


def config_from_args(ns):
    kw = {k: v for k, v in vars(ns).items() if v is not None and k in RunConfig.__dataclass_fields__}
    kw = {k.replace("-", "_"): v for k, v in kw.items()}
    return RunConfig(**kw)


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "catalog": cmd_catalog_list}


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = config_from_args(ns)
    try:
        doc, code, report = COMMANDS[cfg.command](cfg)
        if cfg.format == "csv" and cfg.command != "analyze":
            raise WeylscopeError("csv output is only available for analyze")
        text = render(doc, cfg.format, report)
    except (WeylscopeError, OSError, ValueError) as exc:
        print(f"weylscope: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected failures still honor the exit-code contract
        print(f"weylscope: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
