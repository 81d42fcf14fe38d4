"""End-to-end demo: generate a seeded sequence, invert every segment,
assemble the 3D scene, and write everything under ./demo_out.

    python scripts/demo_pipeline.py [seed] [iterations]
"""

import math
import sys
from pathlib import Path

from texscene.dataset import write_dataset
from texscene.generator import GenConfig, init_sequence, step
from texscene.inverse import ViewingGeometry, estimate_state, write_estimates
from texscene.raster import rasterize, write_pgm
from texscene.scene import export_obj, scene_from_state


def main() -> None:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 7
    iterations = int(sys.argv[2]) if len(sys.argv) > 2 else 6
    out = Path("demo_out")
    out.mkdir(exist_ok=True)

    config = GenConfig()
    state = init_sequence(config, seed)
    states = [state]
    for _ in range(iterations):
        state = step(state)
        states.append(state)
    write_dataset(out / "dataset.ndjson", states)
    for s in states:
        write_pgm(rasterize(s), out / f"picture_{s.token.iteration:04d}.pgm")

    viewing = ViewingGeometry.from_config(config)
    estimates = estimate_state(state.segments, viewing)
    write_estimates(
        out / "estimates.ndjson", seed, iterations, viewing, state.segments, estimates
    )
    for est in estimates:
        print(
            f"segment {est.segment_id}: slant {math.degrees(est.slant):6.2f} deg, "
            f"tilt {math.degrees(est.tilt):7.2f} deg, distance {est.distance:8.2f}"
        )

    _, scene = scene_from_state(state)
    (out / "scene.obj").write_text(export_obj(scene), encoding="utf-8")
    print(f"wrote {len(states)} pictures, {len(estimates)} estimates, "
          f"{len(scene.planes)} scene planes -> {out}/")


if __name__ == "__main__":
    main()
