"""On-disk shot batches: one JSON header line, then bit-packed detection events and observable flips.

Rows are packed little-endian per shot with ``np.packbits(..., axis=1,
bitorder="little")``; detection events come first, observable flips second.
The header records how the shots were made, so ``decode`` can rebuild the
matching graph without extra arguments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frames import ShotBatch

FORMAT = "compassqec-shots/1"


@dataclass
class ShotFile:
    batch: ShotBatch
    spec: dict

    def save(self, path) -> None:
        det = self.batch.detection_events
        obs = self.batch.observable_flips
        header = {
            "format": FORMAT,
            "shots": int(det.shape[0]),
            "num_detectors": int(det.shape[1]),
            "num_observables": int(obs.shape[1]),
            "seed": self.batch.seed,
            "sha256": self.batch.digest(),
            "spec": self.spec,
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            fh.write(np.packbits(det, axis=1, bitorder="little").tobytes())
            fh.write(np.packbits(obs, axis=1, bitorder="little").tobytes())

    @classmethod
    def load(cls, path) -> "ShotFile":
        raw = Path(path).read_bytes()
        newline = raw.find(b"\n")
        if newline < 0:
            raise ValueError("missing shot-file header")
        header = json.loads(raw[:newline])
        if header.get("format") != FORMAT:
            raise ValueError(f"unsupported shot-file format {header.get('format')!r}")
        shots, nd, no = header["shots"], header["num_detectors"], header["num_observables"]
        det_bytes = shots * ((nd + 7) // 8)
        obs_bytes = shots * ((no + 7) // 8)
        body = np.frombuffer(raw[newline + 1:], dtype=np.uint8)
        if body.size != det_bytes + obs_bytes:
            raise ValueError("shot-file body has the wrong length")
        det = np.unpackbits(body[:det_bytes].reshape(shots, -1), axis=1, count=nd, bitorder="little").astype(bool)
        obs = np.unpackbits(body[det_bytes:].reshape(shots, -1), axis=1, count=no, bitorder="little").astype(bool)
        batch = ShotBatch(det, obs, header.get("seed"))
        if batch.digest() != header["sha256"]:
            raise ValueError("shot-file checksum mismatch")
        return cls(batch, header["spec"])
