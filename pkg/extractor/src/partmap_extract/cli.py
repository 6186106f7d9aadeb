"""Entry points: `partmap-extract-2d MANIFEST` and `partmap-extract-3d
MANIFEST`. Each reads one manifest and writes one interchange file; model
and checkpoint errors are reported as-is."""

from __future__ import annotations

import argparse
import sys

from .extract2d import extract_2d
from .extract3d import extract_3d
from .manifest import load_manifest


def _run(kind: str, argv) -> int:
    parser = argparse.ArgumentParser(
        prog=f"partmap-extract-{kind}",
        description=f"export {kind} part embeddings into the interchange schema",
    )
    parser.add_argument("manifest", help="extraction manifest (JSON)")
    args = parser.parse_args(argv)
    try:
        manifest = load_manifest(args.manifest)
        document = extract_2d(manifest) if kind == "2d" else extract_3d(manifest)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {len(document['problems'])} problems -> {manifest.output}")
    return 0


def main_2d(argv=None) -> int:
    return _run("2d", argv)


def main_3d(argv=None) -> int:
    return _run("3d", argv)


if __name__ == "__main__":
    sys.exit(_run(sys.argv[1], sys.argv[2:]))
