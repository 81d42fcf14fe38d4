"""Render a gallery of seeded stimuli for eyeballing variance.

    python scripts/render_gallery.py [n_seeds] [iterations]
"""

import sys
from pathlib import Path

from texscene.generator import GenConfig, run_sequence
from texscene.raster import rasterize, write_pgm


def main() -> None:
    n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    iterations = int(sys.argv[2]) if len(sys.argv) > 2 else 6
    out = Path("gallery_out")
    out.mkdir(exist_ok=True)
    config = GenConfig()
    for seed in range(n_seeds):
        state = run_sequence(config, seed, iterations)
        write_pgm(rasterize(state), out / f"seed_{seed:03d}.pgm")
        frequencies = [seg.frequency for seg in state.segments]
        print(f"seed {seed}: band frequencies {frequencies}")
    print(f"wrote {n_seeds} pictures -> {out}/")


if __name__ == "__main__":
    main()
