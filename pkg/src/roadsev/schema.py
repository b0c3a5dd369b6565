"""Column schema for accident-style tables and its line-oriented file format.

A schema file holds one ``column_name,kind,role`` entry per line. Blank lines
and lines starting with ``#`` are skipped. Column names may themselves
contain commas; the last two fields are always kind and role.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError

KINDS = ("numeric", "categorical", "boolean", "timestamp")
ROLES = ("feature", "target", "ignored")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    role: str = "feature"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[Column, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SchemaError("duplicate column names: " + ", ".join(dupes))
        targets = [c.name for c in self.columns if c.role == "target"]
        if len(targets) != 1:
            raise SchemaError(f"schema needs exactly one target column, found {len(targets)}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def target(self) -> Column:
        return next(c for c in self.columns if c.role == "target")

    @property
    def features(self) -> list[Column]:
        return [c for c in self.columns if c.role == "feature"]

    @property
    def kept(self) -> list[Column]:
        """Columns that are stored in a Dataset (everything not ignored)."""
        return [c for c in self.columns if c.role != "ignored"]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def without(self, names) -> FeatureSchema:
        drop = set(names)
        return FeatureSchema(tuple(c for c in self.columns if c.name not in drop))

    def to_text(self) -> str:
        return "".join(f"{c.name},{c.kind},{c.role}\n" for c in self.columns)


def parse_schema(text: str) -> FeatureSchema:
    cols = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.rsplit(",", 2)
        if len(parts) != 3:
            raise SchemaError(f"schema line {lineno}: expected 'name,kind,role', got {raw!r}")
        name, kind, role = (p.strip() for p in parts)
        cols.append(Column(name, kind, role))
    return FeatureSchema(tuple(cols))


def load_schema(path) -> FeatureSchema:
    return parse_schema(Path(path).read_text(encoding="utf-8"))


def save_schema(schema: FeatureSchema, path) -> None:
    Path(path).write_text(schema.to_text(), encoding="utf-8")


_BOOLEAN_FLAGS = (
    "Amenity", "Bump", "Crossing", "Give Way", "Junction", "No Exit", "Railway",
    "Roundabout", "Station", "Stop", "Traffic Calming", "Traffic Signal", "Turning Loop",
)

# 49 columns of the countrywide accident export, in publication order.
_US_ACCIDENTS = [
    ("ID", "categorical", "ignored"),
    ("Source", "categorical", "feature"),
    ("TMC", "numeric", "feature"),
    ("Severity", "numeric", "target"),
    ("Start Time", "timestamp", "feature"),
    ("End Time", "timestamp", "feature"),
    ("Start Lat", "numeric", "feature"),
    ("Start Lng", "numeric", "feature"),
    ("End Lat", "numeric", "feature"),
    ("End Lng", "numeric", "feature"),
    ("Distance(mi)", "numeric", "feature"),
    ("Description", "categorical", "ignored"),
    ("Number", "numeric", "feature"),
    ("Street", "categorical", "feature"),
    ("Side", "categorical", "feature"),
    ("City", "categorical", "feature"),
    ("County", "categorical", "feature"),
    ("State", "categorical", "feature"),
    ("Zipcode", "categorical", "feature"),
    ("Country", "categorical", "feature"),
    ("Timezone", "categorical", "feature"),
    ("Airport Code", "categorical", "feature"),
    ("Weather Timestamp", "timestamp", "feature"),
    ("Temperature(F)", "numeric", "feature"),
    ("Wind Chill(F)", "numeric", "feature"),
    ("Humidity(%)", "numeric", "feature"),
    ("Pressure(in)", "numeric", "feature"),
    ("Visibility(mi)", "numeric", "feature"),
    ("Wind Direction", "categorical", "feature"),
    ("Wind Speed(mph)", "numeric", "feature"),
    ("Precipitation(in)", "numeric", "feature"),
    ("Weather Condition", "categorical", "feature"),
    *((name, "boolean", "feature") for name in _BOOLEAN_FLAGS),
    ("Sunrise Sunset", "categorical", "feature"),
    ("Civil -Twilight", "categorical", "feature"),
    ("Nautical -Twilight", "categorical", "feature"),
    ("Astronomical Twilight", "categorical", "feature"),
]


def us_accidents_schema() -> FeatureSchema:
    """Default schema for the 49-column US accidents export."""
    return FeatureSchema(tuple(Column(*entry) for entry in _US_ACCIDENTS))
