"""Writers for the attack pipeline's interchange formats.

These mirror the consumer's published file contract (JSON header line plus
one JSON record per line for embedding sets; a three-column CSV for pair
lists) without importing the consumer package: the file format is the only
coupling between the two components.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import BridgeError

EMB_FORMAT_VERSION = 1
PAIR_LABELS = ("match", "mismatch")
PAIR_HEADER = ["id_a", "id_b", "label"]


def write_embedding_file(records: list[tuple[str, str, np.ndarray]],
                         path, role: str = "match") -> None:
    """records: (id, identity_label, unit-norm vector) triples."""
    if records:
        p = int(np.asarray(records[0][2]).shape[0])
    else:
        p = 0
    header = {"fmt": "emb", "v": EMB_FORMAT_VERSION, "p": p,
              "n": len(records), "role": role}
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec_id, label, vec in records:
            vec = np.asarray(vec, dtype=np.float64)
            if vec.ndim != 1 or vec.shape[0] != p:
                raise BridgeError(
                    f"record {rec_id!r} has shape {vec.shape}, expected ({p},)")
            if not np.all(np.isfinite(vec)):
                raise BridgeError(f"record {rec_id!r} has non-finite components")
            fh.write(json.dumps({"id": rec_id, "label": label,
                                 "vec": [float(x) for x in vec]}) + "\n")


def read_embedding_ids(path) -> set[str]:
    """Record ids from an embedding-set file, for pair-spec resolution."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise BridgeError(f"{path}: empty file")
    header = json.loads(lines[0])
    if header.get("fmt") != "emb":
        raise BridgeError(f"{path}: not an embedding set file")
    return {str(json.loads(line)["id"]) for line in lines[1:] if line.strip()}


def write_pair_file(pairs: list[tuple[str, str, str]], path) -> None:
    for i, (_, _, label) in enumerate(pairs):
        if label not in PAIR_LABELS:
            raise BridgeError(
                f"pair {i} has label {label!r}, expected one of {PAIR_LABELS}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PAIR_HEADER)
        writer.writerows(pairs)
