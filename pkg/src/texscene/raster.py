"""Binary-luminance rasterization of sequence states.

One sample per pixel center, no anti-aliasing: band pixels are exactly 0 or
255, everything else is the background luminance. Within a cell, the band
index of a pixel is the number of internal band lines separating it from the
band at the L0 side, so bands fill the whole cell between the L4/L5 chains.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .generator import SequenceState, segment_bands
from .geometry import Point2


@dataclass(frozen=True)
class RasterImage:
    width: int
    height: int
    luminance: bytes

    def __post_init__(self):
        if len(self.luminance) != self.width * self.height:
            raise ValueError("luminance length must be width * height")

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.luminance, dtype=np.uint8).reshape(
            self.height, self.width
        )


def rasterize(state: SequenceState) -> RasterImage:
    config = state.config
    w, h = config.picture_width, config.picture_height
    image = np.full((h, w), config.background_luminance, dtype=np.uint8)

    for seg in state.segments:
        clip = seg.clip_polygon
        xs = [v.x for v in clip.vertices]
        ys = [v.y for v in clip.vertices]
        col0 = max(0, int(np.floor(min(xs) - 0.5)))
        col1 = min(w - 1, int(np.ceil(max(xs))))
        row0 = max(0, int(np.floor(min(ys) - 0.5)))
        row1 = min(h - 1, int(np.ceil(max(ys))))
        if col0 > col1 or row0 > row1:
            continue
        px = np.arange(col0, col1 + 1) + 0.5
        py = np.arange(row0, row1 + 1) + 0.5
        gx, gy = np.meshgrid(px, py)

        inside = np.ones(gx.shape, dtype=bool)
        verts = clip.vertices
        for i in range(len(verts)):
            p, q = verts[i], verts[(i + 1) % len(verts)]
            cross = (q.x - p.x) * (gy - p.y) - (q.y - p.y) * (gx - p.x)
            inside &= cross >= 0.0
        if not inside.any():
            continue

        bands = segment_bands(seg, config.eps_dist)
        a0, b0 = bands.rail_a[0], bands.rail_b[0]
        a1, b1 = bands.rail_a[1], bands.rail_b[1]
        ref = Point2(
            (a0.x + b0.x + a1.x + b1.x) / 4.0, (a0.y + b0.y + a1.y + b1.y) / 4.0
        )
        band_idx = np.zeros(gx.shape, dtype=np.int32)
        for line in seg.band_lines:
            side_ref = line.eval(ref)
            s = line.a * gx + line.b * gy + line.c
            band_idx += (s * side_ref < 0.0).astype(np.int32)

        lum = np.where((band_idx + seg.order) % 2 == 1, 255, 0).astype(np.uint8)
        target = image[row0 : row1 + 1, col0 : col1 + 1]
        target[inside] = lum[inside]

    return RasterImage(w, h, image.tobytes())


def write_pgm(image: RasterImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (image.width, image.height))
        fh.write(image.luminance)


def read_pgm(path) -> RasterImage:
    with open(path, "rb") as fh:
        data = fh.read()
    header, _, rest = data.partition(b"255\n")
    fields = header.split()
    if fields[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = int(fields[1]), int(fields[2])
    return RasterImage(w, h, rest[: w * h])


def png_bytes(image: RasterImage) -> bytes:
    from PIL import Image

    im = Image.frombytes("L", (image.width, image.height), image.luminance)
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()
