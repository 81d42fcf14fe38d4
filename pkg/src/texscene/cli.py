"""Command-line entry point.

Subcommands: gen (seeded dataset + rasters), invert (plane estimates),
assemble (OBJ scene), oracle-check (round-trip sweep), replay (byte-level
verification from the seed), serve (RSVP session server).

Exit codes: 0 success, 1 verification/tolerance failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .dataset import load_record, save_record
from .generator import GenConfig, init_sequence, step
from .inverse import (
    ViewingGeometry,
    estimate_state,
    read_estimates,
    viewing_from_header,
    write_estimates,
)
from .raster import rasterize, write_pgm

ANGLE_TOL = 1e-6
CENTER_TOL = 1e-6
DISTANCE_TOL = 1e-6


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--width", type=int, default=None, help="picture width in pixels")
    parser.add_argument("--height", type=int, default=None, help="picture height in pixels")
    parser.add_argument("--inset-ratio", type=float, default=None)
    parser.add_argument("--generative-ratio", type=float, default=None)
    parser.add_argument("--min-site-offset", type=float, default=None)
    parser.add_argument("--f-min", type=int, default=None)
    parser.add_argument("--f-max", type=int, default=None)
    parser.add_argument("--background", type=int, default=None)
    parser.add_argument("--d0", type=float, default=None, help="eye distance")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")


def _config_from_args(args) -> GenConfig:
    fields: dict = {}
    if args.config:
        fields.update(json.loads(Path(args.config).read_text()))
    overrides = {
        "picture_width": args.width,
        "picture_height": args.height,
        "inset_ratio": args.inset_ratio,
        "generative_ratio": args.generative_ratio,
        "min_site_offset": args.min_site_offset,
        "f_min": args.f_min,
        "f_max": args.f_max,
        "background_luminance": args.background,
        "eye_distance": args.d0,
    }
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return GenConfig(**fields)


def cmd_gen(args) -> int:
    config = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = init_sequence(config, args.seed)
    states = [state]
    for _ in range(args.iterations):
        state = step(state)
        states.append(state)
    with open(out / "dataset.ndjson", "w", encoding="utf-8", newline="\n") as fh:
        for s in states:
            fh.write(save_record(s) + "\n")
    for s in states:
        write_pgm(rasterize(s), out / f"picture_{s.token.iteration:04d}.pgm")
    print(
        f"gen: seed {args.seed}, {args.iterations} iterations, "
        f"{len(states[-1].segments)} segments -> {out}"
    )
    return 0


def cmd_invert(args) -> int:
    with open(args.dataset, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    state = load_record(lines[-1])
    config = state.config
    if args.d0 is not None:
        viewing = ViewingGeometry(
            eye_distance=args.d0,
            reference_extent=0.5 * config.diagonal,
            picture_center=config.picture_center,
        )
    else:
        viewing = ViewingGeometry.from_config(config)
    estimates = estimate_state(state.segments, viewing)
    write_estimates(
        args.out, state.token.seed, state.token.iteration, viewing, state.segments, estimates
    )
    print(f"invert: {len(estimates)} estimates -> {args.out}")
    return 0


@dataclass(frozen=True)
class _PolygonPair:
    creation_polygon: object
    clip_polygon: object


def cmd_assemble(args) -> int:
    from .dataset import dumps
    from .scene import assemble, export_obj, scene_record

    header, rows = read_estimates(args.estimates)
    viewing = viewing_from_header(header)
    estimates = [est for est, _, _ in rows]
    segments = [_PolygonPair(creation, clip) for _, creation, clip in rows]
    scene = assemble(
        segments,
        estimates,
        viewing,
        seed=header.get("seed"),
        iteration=header.get("iteration"),
    )
    Path(args.out).write_text(export_obj(scene), encoding="utf-8", newline="\n")
    if args.json_out:
        Path(args.json_out).write_text(
            dumps(scene_record(scene)) + "\n", encoding="utf-8", newline="\n"
        )
    dropped = f", dropped {list(scene.dropped)}" if scene.dropped else ""
    print(f"assemble: {len(scene.planes)} planes -> {args.out}{dropped}")
    return 0


def cmd_oracle_check(args) -> int:
    from .oracle import run_sweep

    config = _config_from_args(args)
    viewing = ViewingGeometry.from_config(config)
    report = run_sweep(viewing, trials=args.trials, seed=args.seed)
    print(
        f"oracle-check: {report.samples} samples | "
        f"max slant err {report.max_slant_error:.3e} rad | "
        f"max tilt err {report.max_tilt_error:.3e} rad | "
        f"max center err {report.max_center_error:.3e} diag | "
        f"max distance rel err {report.max_distance_rel_error:.3e}"
    )
    if not report.within(ANGLE_TOL, CENTER_TOL, DISTANCE_TOL):
        print("oracle-check: FAILED tolerance", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    with open(args.dataset, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    first = load_record(lines[0])
    state = init_sequence(first.config, first.token.seed)
    rederived = [save_record(state)]
    last = load_record(lines[-1])
    for _ in range(last.token.iteration):
        state = step(state)
        rederived.append(save_record(state))
    if args.verify:
        if len(rederived) != len(lines):
            print(f"replay: record count differs ({len(lines)} vs {len(rederived)})")
            return 1
        for k, (got, want) in enumerate(zip(rederived, lines)):
            if got != want:
                print(f"replay: iteration {k} differs")
                return 1
        print(f"replay: {len(lines)} records verified byte-for-byte")
        return 0
    print(f"replay: rebuilt {len(rederived)} records from seed {first.token.seed}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(
        log_dir=args.dataset,
        viewer_dir=args.viewer,
        default_soa_ms=args.soa_ms,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="texscene")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded dataset with rasters")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--iterations", type=int, default=4)
    p.add_argument("--out", type=str, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("invert", help="estimate a plane per texture segment")
    p.add_argument("--dataset", type=str, required=True)
    p.add_argument("--d0", type=float, default=None, help="override eye distance")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("assemble", help="assemble estimates into an OBJ scene")
    p.add_argument("--estimates", type=str, required=True)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--json-out", type=str, default=None)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("oracle-check", help="forward/inverse round-trip sweep")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    _add_config_flags(p)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("replay", help="re-derive a dataset from its seed")
    p.add_argument("--dataset", type=str, required=True)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="run the RSVP session server")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", type=str, default="127.0.0.1")
    p.add_argument("--soa-ms", type=float, default=250.0)
    p.add_argument("--dataset", type=str, default=None, help="session log directory")
    p.add_argument("--viewer", type=str, default=None, help="static viewer directory")
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
