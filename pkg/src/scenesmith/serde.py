"""Generic dataclass <-> JSON-value conversion driven by type hints."""

from __future__ import annotations

import dataclasses
import types
import typing
from functools import lru_cache
from typing import Any, Union

from scenesmith.errors import ParseError


def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if not f.name.startswith("_")}
    if isinstance(obj, (frozenset, set)):
        return sorted(to_jsonable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise ValueError("non-finite float cannot be serialized")
        return 0.0 if obj == 0 else obj
    return obj


@lru_cache(maxsize=None)
def _hints(cls) -> dict[str, Any]:
    return typing.get_type_hints(cls)


def from_jsonable(tp: Any, data: Any, path: str = "$") -> Any:
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if tp is Any:
        return data
    if origin in (Union, types.UnionType):
        if data is None and type(None) in args:
            return None
        last: Exception | None = None
        for arg in args:
            if arg is type(None):
                continue
            try:
                return from_jsonable(arg, data, path)
            except (ParseError, TypeError, ValueError) as exc:
                last = exc
        raise ParseError(f"value does not match {tp}: {last}", path)
    if dataclasses.is_dataclass(tp):
        if not isinstance(data, dict):
            raise ParseError(f"expected object for {tp.__name__}", path)
        hints = _hints(tp)
        kwargs = {}
        for f in dataclasses.fields(tp):
            if f.name.startswith("_") or not f.init:
                continue
            if f.name not in data:
                if f.default is not dataclasses.MISSING or f.default_factory is not dataclasses.MISSING:
                    continue
                raise ParseError(f"missing field {f.name!r}", path)
            kwargs[f.name] = from_jsonable(hints[f.name], data[f.name], f"{path}.{f.name}")
        return tp(**kwargs)
    if origin is tuple:
        if not isinstance(data, list):
            raise ParseError("expected array", path)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(from_jsonable(args[0], v, f"{path}[{i}]") for i, v in enumerate(data))
        if len(args) != len(data):
            raise ParseError(f"expected {len(args)} items, got {len(data)}", path)
        return tuple(from_jsonable(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, data)))
    if origin in (list,):
        if not isinstance(data, list):
            raise ParseError("expected array", path)
        return [from_jsonable(args[0], v, f"{path}[{i}]") for i, v in enumerate(data)]
    if origin in (frozenset, set):
        if not isinstance(data, list):
            raise ParseError("expected array", path)
        return frozenset(from_jsonable(args[0], v, f"{path}[{i}]") for i, v in enumerate(data))
    if origin is dict:
        if not isinstance(data, dict):
            raise ParseError("expected object", path)
        return {k: from_jsonable(args[1], v, f"{path}.{k}") for k, v in data.items()}
    if tp is float:
        if isinstance(data, bool) or not isinstance(data, (int, float)):
            raise ParseError("expected number", path)
        return float(data)
    if tp is int:
        if isinstance(data, bool) or not isinstance(data, int):
            raise ParseError("expected integer", path)
        return data
    if tp is bool:
        if not isinstance(data, bool):
            raise ParseError("expected boolean", path)
        return data
    if tp is str:
        if not isinstance(data, str):
            raise ParseError("expected string", path)
        return data
    raise TypeError(f"unsupported type {tp!r} at {path}")
