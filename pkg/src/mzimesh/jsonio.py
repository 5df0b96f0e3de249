"""Small JSON helpers shared by the file formats in this package.

All files are written through :func:`canonical_json` so that identical
in-memory objects always produce byte-identical files, which is what makes
whole-pipeline reruns reproducible and hashable.
"""

import hashlib
import json
from pathlib import Path


def canonical_json(obj) -> str:
    """Serialize ``obj`` deterministically (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_of_obj(obj) -> str:
    """Hex digest of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def sha256_of_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path, obj) -> None:
    """Write ``obj`` as pretty-printed JSON with a trailing newline."""
    text = json.dumps(obj, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
