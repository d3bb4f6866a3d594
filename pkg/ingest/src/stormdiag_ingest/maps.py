"""Variable mapping: source names to canonical fgrid names and units.

Each mapping entry declares the canonical target name plus an affine unit
conversion (canonical = scale * source + offset).  Canonical names carry
fixed SI units; a mapping that lands on an unknown canonical name is
rejected up front.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .fgrid import IngestError

# Canonical variable -> unit registry (fgrid contract).
CANONICAL_UNITS = {
    "msl": "Pa",
    "u10": "m s-1",
    "v10": "m s-1",
    "u": "m s-1",
    "v": "m s-1",
    "z": "m2 s-2",
    "t": "K",
    "r": "%",
    "q": "kg kg-1",
}


@dataclass(frozen=True)
class MappedVariable:
    canonical: str
    scale: float = 1.0
    offset: float = 0.0

    @property
    def units(self):
        return CANONICAL_UNITS[self.canonical]

    def apply(self, values):
        if self.scale == 1.0 and self.offset == 0.0:
            return values          # bit-exact passthrough
        return self.scale * values + self.offset


@dataclass
class VariableMap:
    variables: dict = field(default_factory=dict)   # source name -> MappedVariable

    def __post_init__(self):
        for src, mv in self.variables.items():
            if mv.canonical not in CANONICAL_UNITS:
                raise IngestError(
                    f"mapping for {src!r} targets unknown canonical "
                    f"variable {mv.canonical!r}"
                )

    def lookup(self, source_name) -> MappedVariable:
        if source_name not in self.variables:
            raise IngestError(f"no mapping for source variable {source_name!r}")
        return self.variables[source_name]

    def wants(self, source_name) -> bool:
        return source_name in self.variables

    @classmethod
    def from_json(cls, path) -> "VariableMap":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        try:
            raw = doc["variables"]
        except (KeyError, TypeError) as exc:
            raise IngestError(f"malformed variable map {path}") from exc
        variables = {}
        for src, spec in raw.items():
            variables[src] = MappedVariable(
                canonical=spec["name"],
                scale=float(spec.get("scale", 1.0)),
                offset=float(spec.get("offset", 0.0)),
            )
        return cls(variables=variables)
