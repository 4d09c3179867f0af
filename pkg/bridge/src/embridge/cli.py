"""CLI entry points. Exit codes: 0 success, 2 usage/spec error, 3 runtime."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import BridgeError, ExportError, PairSpecError
from .export import ExportManifest, export_embeddings, export_pairs, load_pair_spec
from .formats import read_embedding_ids

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def main_export_embeddings(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="export-embeddings")
    parser.add_argument("--images", required=True, help="corpus root; one subdir per identity")
    parser.add_argument("--out", required=True)
    parser.add_argument("--backend", default="toy", choices=["toy", "facenet"])
    parser.add_argument("--detector", default="center-square",
                        choices=["center-square", "mtcnn"])
    parser.add_argument("--policy", default="first", choices=["first", "all"])
    parser.add_argument("--image-size", type=int, default=160)
    parser.add_argument("--embed-dim", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--role", default="match",
                        choices=["match", "dodge", "unseen", "population"])
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        manifest = ExportManifest(image_dir=args.images, out_path=args.out,
                                  backend=args.backend, detector=args.detector,
                                  policy=args.policy, image_size=args.image_size,
                                  embed_dim=args.embed_dim, seed=args.seed,
                                  role=args.role)
        result = export_embeddings(manifest)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"exported {result.exported} embeddings to {result.out_path}"
          + (f" ({len(result.skipped)} skipped)" if result.skipped else ""))
    return EXIT_OK


def main_export_pairs(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="export-pairs")
    parser.add_argument("--spec", required=True,
                        help='JSON: {"match": [[a,b],...], "mismatch": [[a,b],...]}')
    parser.add_argument("--out", required=True)
    parser.add_argument("--embeddings",
                        help="embedding-set file; pair ids must resolve against it")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = load_pair_spec(args.spec)
        known = read_embedding_ids(args.embeddings) if args.embeddings else None
        count = export_pairs(spec, args.out, known_ids=known)
    except PairSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for ident in exc.unresolved:
            print(f"  unresolved: {ident}", file=sys.stderr)
        return EXIT_CONFIG
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {count} pairs to {args.out}")
    return EXIT_OK
