"""Flat key = value config files with bracketed sections.

The format is a small TOML-like subset: section headers in brackets,
one key = value pair per line, comments with '#'.  Values parse as
int, float, booleans, comma lists, or bare strings.  Manifold sections
are named `[manifold <id>]`; experiment sections carry the subcommand
name.  See the README for the documented keys.
"""

from __future__ import annotations

__all__ = ["ConfigError", "parse_config", "parse_config_text",
           "manifold_sections"]


class ConfigError(ValueError):
    """Malformed configuration input."""


def _parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return [_parse_value(part) for part in raw.split(",") if part.strip()]
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_text(text: str) -> dict[str, dict]:
    sections: dict[str, dict] = {}
    current: dict | None = None
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated section header")
            name = " ".join(body[1:-1].split())
            if not name:
                raise ConfigError(f"line {lineno}: empty section name")
            if name in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{name}]")
            current = {}
            sections[name] = current
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {body!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, raw = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        current[key] = _parse_value(raw)
    return sections


def parse_config(path: str) -> dict[str, dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def manifold_sections(sections: dict[str, dict]) -> dict[str, dict]:
    """All `[manifold <id>]` sections keyed by their id."""
    out = {}
    for name, body in sections.items():
        parts = name.split()
        if parts[0] == "manifold":
            if len(parts) != 2:
                raise ConfigError(f"section [{name}] needs exactly one id")
            out[parts[1]] = body
    return out
