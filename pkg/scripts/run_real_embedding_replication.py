#!/usr/bin/env python3
"""Real-embedding replication (long-running, needs a face photo corpus).

Exports embeddings from a directory of face photos through the bridge,
searches for C master points against all exported identities, and reports
coverage at the standard verification threshold. With an LFW-style corpus
(one subdirectory per identity) and the facenet backend this reproduces the
large-scale coverage experiment; with the toy backend it exercises the same
plumbing offline.

Usage:
    python3 scripts/run_real_embedding_replication.py \
        --images /data/lfw --backend facenet --clusters 9
"""

import argparse
import subprocess
import sys
import tempfile
import time
from pathlib import Path

from matchdodge import (
    EmbeddingSet,
    EsConfig,
    FitnessParams,
    Role,
    SearchConfig,
    read_embedding_set,
    search,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--images", required=True,
                        help="corpus root, one subdirectory per identity")
    parser.add_argument("--backend", default="toy", choices=["toy", "facenet"])
    parser.add_argument("--detector", default="center-square",
                        choices=["center-square", "mtcnn"])
    parser.add_argument("--clusters", type=int, default=9)
    parser.add_argument("--generations", type=int, default=1000)
    parser.add_argument("--population", type=int, default=100)
    parser.add_argument("--threads", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--embeddings-out", default=None,
                        help="keep the exported embedding file here")
    args = parser.parse_args()

    emb_path = args.embeddings_out or str(
        Path(tempfile.mkdtemp()) / "embeddings.emb")
    rc = subprocess.run(["export-embeddings", "--images", args.images,
                         "--out", emb_path, "--backend", args.backend,
                         "--detector", args.detector, "--policy", "first"]).returncode
    if rc != 0:
        return rc

    match = read_embedding_set(emb_path)
    print(f"searching {args.clusters} clusters over {len(match)} identities "
          f"(p={match.dimension})")
    cfg = SearchConfig(
        clusters=args.clusters, fitness=FitnessParams(),
        es=EsConfig(dimension=match.dimension, population=args.population,
                    generations=args.generations), seed=args.seed)
    start = time.perf_counter()
    result = search(match, EmbeddingSet(role=Role.DODGE, records=[]), cfg,
                    threads=args.threads)
    elapsed = time.perf_counter() - start
    print(f"phase 1 coverage: {result.match_coverage.percentage:.2f}% "
          f"({result.match_coverage.matched_count}/{len(match)}) "
          f"in {elapsed:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
