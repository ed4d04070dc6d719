"""Synthesize a small structured image as PGM plus a 3-image IDX file.

The image mixes diagonal stripes with a bright blob so patch-based coding
has real structure to find. Both outputs land in --out.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from scqubo.io import IDX_IMAGES_MAGIC, write_pgm


def synth_image(seed: int, edge: int = 14) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:edge, 0:edge]
    stripes = 0.5 + 0.5 * np.sin((xx + yy) * (2 * np.pi / 7.0))
    cy, cx = rng.uniform(edge * 0.25, edge * 0.75, size=2)
    blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 2.5**2))
    img = 0.55 * stripes + 0.45 * blob + 0.03 * rng.random((edge, edge))
    return np.clip(img, 0.0, 1.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/demo", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--edge", type=int, default=14, help="image side length")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    images = [synth_image(args.seed + k, args.edge) for k in range(3)]
    write_pgm(images[0], out / "demo.pgm")

    quantized = [np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8) for img in images]
    header = IDX_IMAGES_MAGIC.to_bytes(4, "big") + b"".join(
        d.to_bytes(4, "big") for d in (len(quantized), args.edge, args.edge)
    )
    (out / "demo.idx").write_bytes(header + b"".join(q.tobytes() for q in quantized))

    print(f"wrote {out / 'demo.pgm'} and {out / 'demo.idx'} ({args.edge}x{args.edge})")


if __name__ == "__main__":
    main()
