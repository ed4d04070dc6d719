"""Dataset ingestion (IDX), image files (PGM P5), and run persistence.

Persisted artifacts are byte-reproducible: wall-clock durations are
stripped before writing and manifests carry no timestamps, so a rerun
with the same seeds and config regenerates identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from math import prod
from pathlib import Path

import numpy as np

from . import __version__
from .learning import LearnTrace
from .qubo import SampleSet
from .strategies import ChainTrace

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

# refuse absurd headers before allocating anything
_MAX_ELEMENTS = 1 << 40


class IdxFormatError(ValueError):
    pass


class PgmFormatError(ValueError):
    pass


@dataclass(frozen=True)
class IdxTensor:
    dims: tuple[int, ...]
    data: np.ndarray  # flat uint8 payload, row-major

    def __post_init__(self) -> None:
        d = np.asarray(self.data, dtype=np.uint8)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        if prod(self.dims, start=1) != self.data.size:
            raise IdxFormatError(
                f"payload length {self.data.size} does not match dims {self.dims}"
            )


def parse_idx(source: bytes) -> IdxTensor:
    """Big-endian IDX: magic, one 4-byte size per dimension, ubyte payload."""
    if len(source) < 4:
        raise IdxFormatError("truncated header: fewer than 4 bytes")
    magic = int.from_bytes(source[:4], "big")
    if magic == IDX_IMAGES_MAGIC:
        ndim = 3
    elif magic == IDX_LABELS_MAGIC:
        ndim = 1
    else:
        raise IdxFormatError(f"unknown magic 0x{magic:08x}")
    header_len = 4 + 4 * ndim
    if len(source) < header_len:
        raise IdxFormatError(f"truncated header: expected {header_len} bytes")
    dims = tuple(
        int.from_bytes(source[4 + 4 * k : 8 + 4 * k], "big") for k in range(ndim)
    )
    total = prod(dims, start=1)
    if total > _MAX_ELEMENTS:
        raise IdxFormatError(f"dimension overflow: {dims}")
    payload = source[header_len:]
    if len(payload) < total:
        raise IdxFormatError(
            f"truncated payload: expected {total} bytes, got {len(payload)}"
        )
    if len(payload) > total:
        raise IdxFormatError(
            f"oversized payload: expected {total} bytes, got {len(payload)}"
        )
    return IdxTensor(dims, np.frombuffer(payload, dtype=np.uint8))


def load_idx(source: str | Path) -> IdxTensor:
    return parse_idx(Path(source).read_bytes())


def idx_images(tensor: IdxTensor) -> np.ndarray:
    """(N, H, W) float images scaled to [0, 1]."""
    if len(tensor.dims) != 3:
        raise IdxFormatError(f"not an image tensor: dims {tensor.dims}")
    n, h, w = tensor.dims
    return tensor.data.reshape(n, h, w).astype(np.float64) / 255.0


def write_pgm(image: np.ndarray, destination: str | Path) -> None:
    """Binary PGM, maxval 255. Float input is treated as [0,1] intensities."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {img.shape}")
    if img.dtype != np.uint8:
        img = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = img.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(destination).write_bytes(header + img.tobytes())


def read_pgm(source: str | Path) -> np.ndarray:
    """Binary PGM back as a (H, W) uint8 array; write/read round trips exactly."""
    raw = Path(source).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(raw):
        c = raw[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < len(raw) and not raw[pos : pos + 1].isspace():
                pos += 1
            tokens.append(raw[start:pos])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise PgmFormatError(f"{source}: not a binary PGM (P5) file")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise PgmFormatError(f"{source}: malformed header fields")
    if maxval != 255:
        raise PgmFormatError(f"{source}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte separates header from payload
    payload = raw[pos : pos + w * h]
    if len(payload) != w * h:
        raise PgmFormatError(f"{source}: truncated payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w)


# ---------------------------------------------------------------------------
# Run persistence
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _without_duration(metadata: dict) -> dict:
    return {k: v for k, v in metadata.items() if k != "duration_s"}


def version_string() -> str:
    return f"scqubo-{__version__}"


def persist_run(
    artifact: SampleSet | ChainTrace | LearnTrace,
    run_dir: str | Path,
    name: str,
    config: dict | None = None,
) -> dict:
    """Write an artifact plus a `<name>.manifest.json` with checksums.

    SampleSets land as JSON, traces as CSV (chains also get a metadata
    sidecar). Returns the manifest dict.
    """
    out = Path(run_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    seeds: dict = {}
    if isinstance(artifact, SampleSet):
        obj = artifact.to_json_dict()
        obj["metadata"] = _without_duration(obj["metadata"])
        path = out / f"{name}.json"
        path.write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")
        written.append(path)
        seeds["seed"] = artifact.metadata.get("seed")
    elif isinstance(artifact, ChainTrace):
        path = out / f"{name}.csv"
        artifact.to_csv(path)
        written.append(path)
        meta_path = out / f"{name}.meta.json"
        meta = {
            "metadata": _without_duration(artifact.metadata),
            "best_energy": artifact.best_energy,
            "best_state": "".join(str(int(b)) for b in artifact.best_state),
        }
        meta_path.write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
        written.append(meta_path)
        seeds["seed"] = artifact.metadata.get("seed")
    elif isinstance(artifact, LearnTrace):
        path = out / f"{name}.csv"
        artifact.to_csv(path)
        written.append(path)
    else:
        raise TypeError(f"cannot persist {type(artifact).__name__}")
    manifest = {
        "version": version_string(),
        "name": name,
        "artifacts": {p.name: _sha256(p) for p in written},
        "seeds": seeds,
        "config": dict(config or {}),
    }
    manifest_path = out / f"{name}.manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True), encoding="utf-8")
    return manifest
