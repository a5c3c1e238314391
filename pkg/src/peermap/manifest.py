"""Run manifests: enough recorded state to reproduce a command exactly.

Every CLI command writes ``manifest.json`` next to its outputs. The file
holds the resolved parameters, digests of the inputs, and the output names,
and deliberately nothing volatile (no timestamps, no host info), so rerunning
a manifest into a fresh directory reproduces every output byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import InputError, SchemaError

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_manifest(
    out_dir: Path,
    *,
    command: str,
    parameters: dict,
    input_paths: list[str],
    outputs: list[str],
    seed: int | None,
    version: str,
) -> Path:
    doc = {
        "tool": "peermap",
        "version": version,
        "command": command,
        "parameters": parameters,
        "inputs": {p: file_digest(p) for p in input_paths},
        "outputs": sorted(outputs),
        "seed": seed,
    }
    path = out_dir / MANIFEST_NAME
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(doc, fp, sort_keys=True, indent=2)
        fp.write("\n")
    return path


def load_manifest(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fp:
            doc = json.load(fp)
    except OSError as exc:
        raise InputError(f"cannot read manifest: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc}") from None
    for key in ("tool", "command", "parameters", "inputs", "outputs"):
        if key not in doc:
            raise SchemaError(f"manifest missing key {key!r}")
    if doc["tool"] != "peermap":
        raise SchemaError(f"manifest written by {doc['tool']!r}, not this tool")
    return doc


def check_manifest_inputs(doc: dict) -> None:
    """Fail if any recorded input changed since the manifest was written."""
    for path, digest in doc["inputs"].items():
        try:
            current = file_digest(path)
        except OSError as exc:
            raise InputError(f"manifest input missing: {exc}") from None
        if current != digest:
            raise InputError(
                f"manifest input {path} changed since the original run "
                f"(recorded {digest}, found {current})"
            )
