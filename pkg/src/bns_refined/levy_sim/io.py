"""Ensemble output: long-format CSV and a little-endian binary columnar file.

Binary layout::

    16 bytes  magic b"BNSENSEMBLE\\x00v001"
     4 bytes  uint32 LE header length H
     H bytes  UTF-8 JSON header: n_paths, n_nodes, columns, model, seed
     ...      float64 LE columns in header order: "t" (n_nodes values), then
              each per-path column as n_paths * n_nodes values, path-major
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .simulate import SimEnsemble

MAGIC = b"BNSENSEMBLE\x00v001"
assert len(MAGIC) == 16


def _columns(ens: SimEnsemble) -> dict[str, np.ndarray]:
    return {"X": ens.X, "sigma_sq": ens.sigma_sq, "S": ens.S, "jump_sq_z": ens.jump_sq_z}


def write_ensemble_csv(ens: SimEnsemble, path: str | Path) -> Path:
    path = Path(path)
    cols = _columns(ens)
    t = ens.recorded_times
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "node", "t", *cols])
        for p in range(ens.n_paths):
            for j, node in enumerate(ens.nodes):
                w.writerow([p, int(node), repr(float(t[j]))] + [repr(float(c[p, j])) for c in cols.values()])
    return path


def write_ensemble_binary(ens: SimEnsemble, path: str | Path) -> Path:
    path = Path(path)
    cols = _columns(ens)
    header = json.dumps({
        "n_paths": ens.n_paths,
        "n_nodes": len(ens.nodes),
        "nodes": ens.nodes.tolist(),
        "columns": list(cols),
        "model": ens.model,
        "seed": ens.seed,
    }, sort_keys=True).encode()
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(ens.recorded_times, dtype="<f8").tobytes())
        for c in cols.values():
            fh.write(np.ascontiguousarray(c, dtype="<f8").tobytes())
    return path


def read_ensemble_binary(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:16] != MAGIC:
        raise ValueError(f"{path}: not a BN-S ensemble file")
    (hlen,) = struct.unpack("<I", raw[16:20])
    header = json.loads(raw[20:20 + hlen])
    n, m = header["n_paths"], header["n_nodes"]
    pos = 20 + hlen
    out = {"t": np.frombuffer(raw, "<f8", m, pos).copy()}
    pos += 8 * m
    for name in header["columns"]:
        out[name] = np.frombuffer(raw, "<f8", n * m, pos).reshape(n, m).copy()
        pos += 8 * n * m
    if pos != len(raw):
        raise ValueError(f"{path}: trailing bytes after last column")
    return header, out
