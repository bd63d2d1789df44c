"""
Deserializable base class for fsgraph configuration and report records.
"""

import json
import typing
from typing import Any, Dict, get_type_hints

from .errors import ConfigError


def _hints(cls) -> Dict[str, Any]:
    hints: Dict[str, Any] = {}
    for klass in reversed(cls.__mro__):
        if klass is object or klass is Deserializable:
            continue
        try:
            hints.update(get_type_hints(klass))
        except (NameError, TypeError):
            hints.update(getattr(klass, "__annotations__", {}))
    return {k: v for k, v in hints.items() if not k.startswith("_")}


def _is_record(tp) -> bool:
    return isinstance(tp, type) and issubclass(tp, Deserializable)


def _optional_inner(tp):
    # Optional[X] -> X, anything else unchanged
    if typing.get_origin(tp) is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return tp


class Deserializable:
    """
    Base class for records that are built from and dumped to JSON-like dicts.

    Fields are declared as class annotations. A class-level value is the default;
    a field annotated with another Deserializable and left out is built from that
    class's defaults. Set ``__strict__ = True`` to reject keys that are not fields.
    """

    __strict__ = False

    def __init__(self, **kwargs):
        annotations = _hints(self.__class__)

        if self.__strict__:
            unknown = sorted(set(kwargs) - set(annotations))
            if unknown:
                raise ConfigError(
                    f"unknown key(s) for {self.__class__.__name__}: {', '.join(unknown)}"
                )

        for field_name, field_type in annotations.items():
            if field_name in kwargs:
                continue
            inner = _optional_inner(field_type)
            if hasattr(self.__class__, field_name):
                default_value = getattr(self.__class__, field_name)
                # Copy mutable class defaults so instances never share them
                if isinstance(default_value, (list, dict, set)):
                    default_value = type(default_value)(default_value)
                setattr(self, field_name, default_value)
            elif _is_record(inner) and inner is field_type:
                setattr(self, field_name, inner())
            else:
                origin = typing.get_origin(field_type)
                if origin is list:
                    setattr(self, field_name, [])
                elif origin is dict:
                    setattr(self, field_name, {})
                else:
                    setattr(self, field_name, None)

        for key, value in kwargs.items():
            setattr(self, key, self._coerce(annotations.get(key), value))

        self.validate()

    @staticmethod
    def _coerce(field_type, value):
        if field_type is None or value is None:
            return value
        field_type = _optional_inner(field_type)
        origin = typing.get_origin(field_type)

        # list[Record]
        if origin is list and isinstance(value, list):
            (elem_type,) = typing.get_args(field_type) or (None,)
            if _is_record(elem_type):
                return [
                    item if isinstance(item, elem_type) else elem_type.model_validate(item)
                    for item in value
                ]
            return list(value)

        # dict[str, Record]
        if origin is dict and isinstance(value, dict):
            args = typing.get_args(field_type)
            val_type = args[1] if len(args) == 2 else None
            if _is_record(val_type):
                return {
                    k: v if isinstance(v, val_type) else val_type.model_validate(v)
                    for k, v in value.items()
                }
            return dict(value)

        if _is_record(field_type) and isinstance(value, dict):
            return field_type.model_validate(value)
        return value

    def validate(self) -> None:
        """Check field invariants; subclasses raise ConfigError on violation."""

    @classmethod
    def model_validate(cls, obj):
        if isinstance(obj, cls):
            return obj
        if not isinstance(obj, dict):
            raise ConfigError(f"{cls.__name__} expects an object, got {type(obj).__name__}")
        return cls(**obj)

    @classmethod
    def model_fields(cls):
        return {name: {"type": hint} for name, hint in _hints(cls).items()}

    def model_copy(self, **updates):
        data = self.model_dump(exclude_none=False)
        data.update(updates)
        return self.__class__.model_validate(data)

    def model_dump(self, exclude_none=True):
        """Convert the record (recursively) to plain dicts and lists."""
        result = {}
        for k, v in self.__dict__.items():
            if k.startswith("_"):
                continue
            if exclude_none and v is None:
                continue
            result[k] = _dump_value(v, exclude_none)
        return result

    def model_dump_json(self, exclude_none=False):
        return json.dumps(self.model_dump(exclude_none=exclude_none), ensure_ascii=False, indent=2)

    def __eq__(self, other):
        if not isinstance(other, Deserializable) or type(other) is not type(self):
            return NotImplemented
        return self.model_dump(exclude_none=False) == other.model_dump(exclude_none=False)

    def __repr__(self):
        fields = ", ".join(f"{k}={v!r}" for k, v in self.__dict__.items() if not k.startswith("_"))
        return f"{self.__class__.__name__}({fields})"


def _dump_value(v, exclude_none):
    if isinstance(v, Deserializable):
        return v.model_dump(exclude_none=exclude_none)
    if isinstance(v, (list, tuple)):
        return [_dump_value(item, exclude_none) for item in v if not (exclude_none and item is None)]
    if isinstance(v, dict):
        return {
            dict_k: _dump_value(dict_v, exclude_none)
            for dict_k, dict_v in v.items()
            if not (exclude_none and dict_v is None)
        }
    return v
