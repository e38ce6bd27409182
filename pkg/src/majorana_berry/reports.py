"""Machine-readable report documents (JSON) and human-readable tables."""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .berry_engine import BerryReport
from .errors import InvalidInputError
from .sphere_geom import angle_between
from .spin_core import SpinState
from .stellar import extract_stars, orthogonality_residuals


def dumps(doc) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _reject_constant(name):
    raise InvalidInputError(f"non-finite number {name} in input")


def loads(text: str):
    if not text.strip():
        raise InvalidInputError("empty input document")
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"malformed JSON input: {exc}") from None


def berry_document(report: BerryReport, path: dict | None = None, closed_form=None) -> dict:
    doc = {"type": "berry_report", "report": report.to_dict()}
    if path is not None:
        doc["path"] = path
    if closed_form is not None:
        doc["closed_form"] = closed_form
    return doc


def parse_berry_report(text: str) -> BerryReport:
    doc = loads(text)
    if doc.get("type") != "berry_report":
        raise InvalidInputError("not a berry_report document")
    return BerryReport.from_dict(doc["report"])


def berry_table(report: BerryReport, closed_form=None) -> str:
    lines = [
        f"spin j = {report.j}   samples = {report.samples}   closure = {report.closure}"
        f"   permutation = {list(report.permutation)}",
        "",
        f"{'term':<24}{'value (rad)':>24}",
    ]
    for cycle, gamma in zip(report.star_cycles, report.gamma_star_terms):
        label = "star " + "->".join(str(i) for i in cycle)
        lines.append(f"{label:<24}{gamma:>24.12f}")
    for p in report.pair_terms:
        label = f"pair ({p.i},{p.j})"
        lines.append(
            f"{label:<24}{p.integral:>24.12f}   self-rotation {p.self_rotation:.6f}"
            f" rad, mean Θ {p.mean_theta:.6f} ({np.degrees(p.mean_theta):.2f} deg)"
        )
    lines += [
        f"{'total (formula)':<24}{report.gamma_formula:>24.12f}",
        f"{'oracle':<24}{report.gamma_oracle:>24.12f}",
        f"{'residual mod 2π':<24}{report.residual:>24.3e}",
    ]
    if report.fast_path is not None:
        lines.append(f"{'rigid fast path':<24}{report.fast_path:>24.12f}")
    if closed_form is not None:
        # shown on the same 2π branch as the formula total
        gamma = closed_form["gamma"]
        gamma -= 2 * np.pi * np.round((gamma - report.gamma_formula) / (2 * np.pi))
        lines.append(f"{'closed form':<24}{gamma:>24.12f}")
    lines.append(f"verified at tolerance {report.tolerance:g}: {report.verified}")
    return "\n".join(lines) + "\n"


def parse_state(doc) -> tuple[SpinState, bool]:
    """Spin state from {"amps": [[re, im], ...], "j": optional}.

    Returns the state and whether it had to be renormalized.  Inputs whose
    norm is off by more than 1e-6 are rejected.
    """
    if not isinstance(doc, dict) or "amps" not in doc:
        raise InvalidInputError("state document needs an 'amps' list of [re, im] pairs")
    try:
        raw = np.asarray(doc["amps"], dtype=float)
    except (TypeError, ValueError):
        raise InvalidInputError("'amps' must be a list of numeric [re, im] pairs") from None
    if not np.all(np.isfinite(raw)):
        raise InvalidInputError("amplitudes must be finite")
    if raw.ndim != 2 or raw.shape[1] != 2 or len(raw) < 2:
        raise InvalidInputError("'amps' must be a list of at least two [re, im] pairs")
    amps = raw[:, 0] + 1j * raw[:, 1]
    j = doc.get("j", (len(amps) - 1) / 2)
    if not isinstance(j, (int, float)) or isinstance(j, bool) or abs(2 * j + 1 - len(amps)) > 1e-12:
        raise InvalidInputError(f"j = {j} does not match {len(amps)} amplitudes")
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > 1e-6:
        raise InvalidInputError(f"state norm {norm!r} is not 1 (tolerance 1e-6)")
    return SpinState(float(j), amps / norm), abs(norm - 1.0) > 1e-12


def stars_document(psi: SpinState) -> dict:
    stars = extract_stars(psi)
    residuals = orthogonality_residuals(psi, stars)
    groups: list[list[int]] = []
    for k, n in enumerate(stars):
        for g in groups:
            if angle_between(stars[g[0]], n) < 1e-9:
                g.append(k)
                break
        else:
            groups.append([k])
    entries = []
    for g in groups:
        n = stars[g[0]]
        entries.append({
            "vector": [float(x) for x in n],
            "theta": float(np.arccos(np.clip(n[2], -1.0, 1.0))),
            "phi": float(np.arctan2(n[1], n[0])),
            "multiplicity": len(g),
            "residual": float(residuals[g].max()),
        })
    return {"type": "stars", "j": psi.j, "stars": entries}


def stars_table(doc: dict) -> str:
    lines = [f"spin j = {doc['j']}", f"{'x':>12}{'y':>12}{'z':>12}{'theta':>12}{'phi':>12}"
             f"{'mult':>6}{'residual':>12}"]
    for s in doc["stars"]:
        x, y, z = s["vector"]
        lines.append(f"{x:>12.8f}{y:>12.8f}{z:>12.8f}{s['theta']:>12.8f}{s['phi']:>12.8f}"
                     f"{s['multiplicity']:>6d}{s['residual']:>12.2e}")
    return "\n".join(lines) + "\n"


def csv_table(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
