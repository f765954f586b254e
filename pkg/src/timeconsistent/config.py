"""Run configuration: schema validation and construction of model objects."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import jsonschema

from .discount import DiscountSpec, from_dict
from .environment import environment_from_json
from .errors import DomainError
from .utility import UtilitySpec

SECTIONS = ("discount", "utility", "environment", "terminal", "numerics", "input", "output")


class ConfigError(DomainError):
    """The configuration does not validate or cannot be turned into model objects."""


@lru_cache(maxsize=1)
def load_schema():
    text = resources.files(__package__).joinpath("config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(data):
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"cli: config invalid at {where}: {err.message}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    discount: dict | None = None
    utility: dict | None = None
    environment: dict | None = None
    terminal: dict | None = None
    numerics: dict | None = None
    input: dict | None = None
    output: dict | None = None

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("cli: config must be a JSON object")
        validate(data)
        return cls(data["command"], **{k: copy.deepcopy(data[k]) for k in SECTIONS if k in data})

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cli: cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cli: config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self):
        out = {"command": self.command}
        for key in SECTIONS:
            val = getattr(self, key)
            if val is not None:
                out[key] = copy.deepcopy(val)
        return out

    def with_numerics(self, **overrides) -> "RunConfig":
        """A re-validated copy with the given numerics keys replaced (None values skipped)."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if not overrides:
            return self
        data = self.to_dict()
        data["numerics"] = {**data.get("numerics", {}), **overrides}
        return RunConfig.from_dict(data)

    def num(self, key, default=None):
        return (self.numerics or {}).get(key, default)

    # model objects -----------------------------------------------------

    def discount_spec(self) -> DiscountSpec:
        return from_dict(self.discount)

    def utility_spec(self) -> UtilitySpec:
        return UtilitySpec(float(self.utility["gamma"]))

    def environment_spec(self):
        return environment_from_json(self.environment)
