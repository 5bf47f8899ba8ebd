"""Dataclass configs with command-line overrides.

Every field becomes a ``--flag``; tuple fields take comma-separated values.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import typing


def _caster(tp):
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    origin = typing.get_origin(tp)
    if origin is not tuple and len(args) == 1:  # optional field
        return _caster(args[0])
    if origin is tuple:
        inner = typing.get_args(tp)[0]
        return lambda s: tuple(inner(v) for v in s.split(",") if v)
    return tp


def parse_config(cls, argv=None):
    hints = typing.get_type_hints(cls)
    ap = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        default = f.default
        shown = ",".join(map(str, default)) if isinstance(default, tuple) else default
        if hints[f.name] is bool:
            ap.add_argument(f"--{f.name.replace('_', '-')}", action=argparse.BooleanOptionalAction, default=default)
            continue
        ap.add_argument(f"--{f.name.replace('_', '-')}", type=_caster(hints[f.name]), default=default,
                        help=f"default {shown}")
    return cls(**vars(ap.parse_args(argv)))


def emit(rows: list[dict], out: str | None) -> None:
    """JSON lines to ``out`` or stdout."""
    fh = open(out, "w", encoding="utf-8") if out else sys.stdout
    try:
        for r in rows:
            fh.write(json.dumps(r) + "\n")
    finally:
        if out:
            fh.close()
