"""Command-line front end.

Commands: ``coverage``, ``gain-profile``, ``outage``, ``validate``, ``boundary``.

Exit status: 0 success, 1 lint warnings (``validate`` only), 2 schema or lint
error, 3 computation error, 4 Monte Carlo floor prevents the requested
slope fit. ``STARRIS_OUTPUT_DIR`` sets the directory for relative ``--out``
paths.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import (
    MIN_EVENTS,
    OutageCurve,
    OutagePoint,
    asymptotic_outage,
    estimate_diversity_order,
    monte_carlo_curve,
    outage_oracle_numeric,
)
from .beamform import beam_peak
from .channel import (
    LinkGeometry,
    coverage_map,
    default_min_distance,
    far_field_gain,
    field_boundary,
    incident_field,
    los_smallscale,
    near_field_channels,
)
from .errors import NearFieldRegionWarning, ResolutionTooCoarse, ScenarioError, StarRisError
from .scenario import LINT_CODES, ScenarioDocument, lint, load_preset, load_scenario
from .surface import Mode

EXIT_OK, EXIT_WARN, EXIT_SCHEMA, EXIT_COMPUTE, EXIT_MC_FLOOR = 0, 1, 2, 3, 4
OUTPUT_DIR_ENV = "STARRIS_OUTPUT_DIR"
UNITS_NOTE = "paper-native units, C0=1; gains are channel amplitudes"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_sidecar(path: Path, payload: dict) -> Path:
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return side


def resolve_out(out: str | None, default_name: str) -> Path:
    base = os.environ.get(OUTPUT_DIR_ENV)
    p = Path(out) if out else Path(default_name)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _load(args) -> ScenarioDocument:
    doc = load_preset(args.preset) if args.preset else load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        doc = doc.model_copy(update={"run": doc.run.model_copy(update={"seed": args.seed})})
    return doc


def _lint_errors(doc: ScenarioDocument) -> bool:
    errors = [i for i in lint(doc) if i.severity == "error"]
    for i in errors:
        print(f"error {i.code}: {i.message}", file=sys.stderr)
    return bool(errors)


def _envelope(command: str, doc: ScenarioDocument) -> dict:
    return {
        "command": command,
        "scenario": doc.resolved(),
        "config_digest": doc.digest(),
        "seed": doc.run.seed,
        "units_note": UNITS_NOTE,
    }


# -- commands ---------------------------------------------------------------

def cmd_coverage(doc: ScenarioDocument, out: Path, workers: int = 1) -> int:
    ap = doc.build_aperture()
    config = doc.build_surface(ap)
    h = incident_field(ap, doc.steering.tx_position, doc.run.incident)
    boundary = field_boundary(ap)
    targets = {"T": doc.steering.angle_t_deg, "R": doc.steering.angle_r_deg}

    blocks, planes, peaks = {}, {}, {}
    for mode in (Mode.R, Mode.T):
        plane = doc.plane(mode)
        grid = coverage_map(config, h, plane, mode, doc.run.include_leaning, workers=workers)
        angle, gain = beam_peak(grid, plane, min_radius=boundary)
        blocks[mode], planes[mode] = grid, plane
        peaks[mode.value] = {"angle_deg": math.degrees(angle), "gain": gain, "target_deg": targets[mode.value]}

    u = planes[Mode.T].u
    rows = []
    for mode in (Mode.R, Mode.T):
        for v, line in zip(planes[mode].v, blocks[mode]):
            rows.append([fmt(v), *map(fmt, line)])
    _write_csv(out, [f"z_m\\{planes[Mode.T].axis}_m", *map(fmt, u)], rows)

    payload = _envelope("coverage", doc)
    payload.update({
        "field_boundary_m": boundary,
        "planes": {m.value: vars(p) | {"side": m.value} for m, p in planes.items()},
        "peaks": peaks,
        "layout": "rows are z (ascending, reflection side negative), columns are the in-plane axis",
    })
    _write_sidecar(out, payload)

    print(f"field boundary: {boundary:.6g} m ({boundary / ap.wavelength:.6g} wavelengths)")
    for side in ("T", "R"):
        p = peaks[side]
        print(f"beam peak {side}: {p['angle_deg']:.2f} deg (target {p['target_deg']:.2f} deg), gain {p['gain']:.6g}")
    return EXIT_OK


def cut_points(doc: ScenarioDocument) -> tuple[np.ndarray, np.ndarray, list[Mode]]:
    """Signed distances (wavelengths), Cartesian points and sides along the configured cut."""
    ap = doc.build_aperture()
    theta = math.radians(doc.run.cut.angle_deg)
    d = doc.cut_distances()
    sides = [Mode.T if x < 0 else Mode.R for x in d]
    sign = np.where(d < 0, 1.0, -1.0)
    r = np.abs(d) * ap.wavelength
    pts = np.column_stack([r * math.sin(theta), np.zeros_like(r), sign * r * math.cos(theta)])
    return d, pts, sides


def cmd_gain_profile(doc: ScenarioDocument, out: Path, workers: int = 1) -> int:
    ap = doc.build_aperture()
    config = doc.build_surface(ap)
    h = incident_field(ap, doc.steering.tx_position, doc.run.incident)
    pl = doc.build_pathloss()
    boundary = field_boundary(ap)
    min_d = default_min_distance(ap)

    d, pts, sides = cut_points(doc)
    # drop samples on top of an element or in the surface plane (no side)
    nearest = np.min(np.linalg.norm(pts[:, None, :] - ap.element_positions[None], axis=2), axis=1)
    keep = (nearest >= min_d) & (pts[:, 2] != 0)
    d, pts = d[keep], pts[keep]
    sides = [s for s, k in zip(sides, keep) if k]

    near_on = np.empty(len(d))
    near_off = np.empty(len(d))
    for mode in (Mode.T, Mode.R):
        idx = np.array([i for i, s in enumerate(sides) if s is mode], dtype=int)
        if idx.size == 0:
            continue
        near_on[idx] = np.abs(near_field_channels(config, h, pts[idx], mode, True))
        near_off[idx] = np.abs(near_field_channels(config, h, pts[idx], mode, False))

    far = np.empty(len(d))
    for i, (p, mode) in enumerate(zip(pts, sides)):
        geom = LinkGeometry(doc.steering.tx_position, tuple(p))
        r_s, h_s = los_smallscale(ap, doc.steering.tx_position, p)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearFieldRegionWarning)
            far[i] = far_field_gain(geom, pl, r_s, h_s, config, mode)

    dist_m = np.abs(d) * ap.wavelength
    rows = [
        [fmt(di), fmt(dm), s.value, fmt(a), fmt(b), fmt(c), int(dm < boundary)]
        for di, dm, s, a, b, c in zip(d, dist_m, sides, near_on, near_off, far)
    ]
    _write_csv(out, ["d_wavelengths", "d_m", "side", "near_leaning", "near_no_leaning", "far_field", "inside_boundary"], rows)

    payload = _envelope("gain-profile", doc)
    payload.update({"field_boundary_m": boundary, "dropped_samples": int((~keep).sum())})
    window = (dist_m >= 2 * boundary) & (dist_m <= 4 * boundary)
    if window.any():
        ratio = near_on[window] / far[window]
        payload["near_far_ratio_relstd_2B_4B"] = float(np.std(ratio) / np.mean(ratio))
        print(f"near/far ratio relative std over [2B, 4B]: {payload['near_far_ratio_relstd_2B_4B']:.3g}")
    _write_sidecar(out, payload)
    print(f"field boundary: {boundary:.6g} m ({boundary / ap.wavelength:.6g} wavelengths)")
    print(f"{len(d)} samples written, {int((~keep).sum())} dropped by the min-distance guard")
    return EXIT_OK


def _fit(curve_points, tail_fraction):
    try:
        return estimate_diversity_order(OutageCurve(tuple(curve_points)), tail_fraction)
    except StarRisError:
        return None


def cmd_outage(doc: ScenarioDocument, out: Path, workers: int = 1) -> int:
    run = doc.run
    db = run.gamma_t_sweep_db.gamma_t_db
    gt = 10.0 ** (db / 10.0)
    rows, fits = [], {}
    for group in run.groups:
        sc = doc.outage_scenario(group)
        mc = monte_carlo_curve(sc, gt, run.trials, run.seed, run.max_trials, workers=workers)
        try:
            asym = np.atleast_1d(asymptotic_outage(sc, gt))
        except ValueError:
            asym = np.full(len(gt), np.nan)
        orc = np.full(len(gt), np.nan)
        if run.oracle:
            for i, g in enumerate(gt):
                try:
                    orc[i] = outage_oracle_numeric(sc, g, run.oracle_resolution)
                except ResolutionTooCoarse:
                    pass
        for d, p, a, o in zip(db, mc.points, asym, orc):
            ok = p.events >= MIN_EVENTS
            rows.append([
                doc.surface.kind, group, fmt(d),
                fmt(p.probability if ok else math.nan), fmt(p.halfwidth if ok else math.nan),
                fmt(a), fmt(o), p.trials, p.events,
            ])

        # the MC fit needs every point of the tail window above the event floor
        mc_tail = mc.points[-math.ceil(run.tail_fraction * len(mc.points)):]
        mc_ok = all(p.events >= MIN_EVENTS for p in mc_tail)
        fits[group] = {
            "asymptotic": _fit([OutagePoint(g, a, "asymptotic") for g, a in zip(gt, asym) if np.isfinite(a)],
                               run.tail_fraction),
            "oracle": _fit([OutagePoint(g, o, "oracle") for g, o in zip(gt, orc) if np.isfinite(o)],
                           run.tail_fraction),
            "mc": _fit(mc_tail, 1.0) if mc_ok else None,
        }

    _write_csv(out, ["surface", "group", "gamma_t_db", "p_mc", "ci_halfwidth", "p_asymptotic", "p_oracle",
                     "mc_trials", "mc_events"], rows)
    payload = _envelope("outage", doc)
    payload["diversity_orders"] = fits
    _write_sidecar(out, payload)

    status = EXIT_OK
    for group, f in fits.items():
        parts = ", ".join(f"{k} {v:.4f}" if v is not None else f"{k} n/a" for k, v in f.items())
        print(f"diversity order {doc.surface.kind} group {group}: {parts}")
        if f[run.fit] is None:
            print(f"cannot fit the {run.fit} column for group {group}", file=sys.stderr)
            status = EXIT_MC_FLOOR
    return status


def cmd_validate(doc: ScenarioDocument) -> int:
    issues = lint(doc)
    for i in issues:
        print(f"{i.severity} {i.code}: {i.message}")
    if any(i.severity == "error" for i in issues):
        return EXIT_SCHEMA
    return EXIT_WARN if issues else EXIT_OK


def cmd_boundary(doc: ScenarioDocument) -> int:
    ap = doc.build_aperture()
    b = field_boundary(ap)
    print(f"{fmt(b)} m ({fmt(b / ap.wavelength)} wavelengths; L_a = {fmt(ap.largest_dimension)} m)")
    return EXIT_OK


# -- entry point ----------------------------------------------------------

_COMPUTE = {
    "coverage": (cmd_coverage, "coverage.csv"),
    "gain-profile": (cmd_gain_profile, "gain_profile.csv"),
    "outage": (cmd_outage, "outage.csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starris", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("coverage", "gain-profile", "outage", "validate", "boundary"):
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", metavar="PATH")
        src.add_argument("--preset", metavar="NAME")
        if name in _COMPUTE:
            p.add_argument("--out", metavar="PATH")
            p.add_argument("--seed", type=int, metavar="N")
            p.add_argument("--workers", type=int, default=1, metavar="N")
    sub.choices["validate"].epilog = "lint codes: " + ", ".join(
        f"{code} ({sev})" for code, (sev, _) in LINT_CODES.items()
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _load(args)
    except ScenarioError as exc:
        print(f"error SCHEMA: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    if args.command == "validate":
        return cmd_validate(doc)
    if args.command == "boundary":
        return cmd_boundary(doc)

    if _lint_errors(doc):
        return EXIT_SCHEMA
    func, default_name = _COMPUTE[args.command]
    out = resolve_out(args.out, default_name)
    try:
        return func(doc, out, workers=max(1, args.workers))
    except (StarRisError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
