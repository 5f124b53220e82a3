from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Optional

try:  # Prefer strict YAML parsing when available.
    import strictyaml  # type: ignore
except Exception:  # pragma: no cover - optional dependency
    strictyaml = None  # type: ignore


BUILTIN_PREFIX = "builtin:"
YAML_SUFFIXES = {".yaml", ".yml"}


class DocumentError(ValueError):
    """Raised when a ring, family or graph document cannot be read."""


def detect_format(content: str, input_format: str = "auto") -> str:
    if input_format != "auto":
        return input_format
    snippet = content.lstrip()
    if snippet.startswith(("{", "[")):
        return "json"
    return "yaml"


def parse_document(content: str, input_format: str = "auto") -> dict:
    """Parse a JSON or YAML document into a mapping.

    YAML goes through strictyaml, so every scalar arrives as a string; the
    loaders coerce numbers themselves.
    """
    detected = detect_format(content, input_format)
    if detected == "json":
        try:
            data = json.loads(content)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"Invalid JSON document: {exc}") from exc
    elif detected == "yaml":
        if strictyaml is None:
            raise DocumentError("YAML documents need the strictyaml package")
        try:
            data = strictyaml.load(content).data
        except Exception as exc:
            raise DocumentError(f"Invalid YAML document: {exc}") from exc
    else:
        raise DocumentError(f"Unsupported document format: {input_format}")
    if not isinstance(data, dict):
        raise DocumentError("Document must be a mapping at the top level")
    return data


def read_document(path: Path | str) -> dict:
    path = Path(path)
    if not path.exists():
        raise DocumentError(f"Document not found: {path}")
    content = path.read_text(encoding="utf-8")
    input_format = "yaml" if path.suffix.lower() in YAML_SUFFIXES else "auto"
    return parse_document(content, input_format)


def builtin_name(reference: str) -> Optional[str]:
    """Return ``name`` for ``builtin:name`` references, else None."""
    if reference.startswith(BUILTIN_PREFIX):
        return reference[len(BUILTIN_PREFIX):]
    return None


def require(document: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in document:
        raise DocumentError(f"Missing required field in {context} document: {key}")
    return document[key]


def as_int(value: Any, field: str) -> int:
    if isinstance(value, bool):
        raise DocumentError(f"Field '{field}' must be an integer, got {value!r}")
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"Field '{field}' must be an integer, got {value!r}") from exc


def dump_document(document: Mapping[str, Any]) -> str:
    return json.dumps(document, ensure_ascii=False, indent=2, sort_keys=False)
