"""Seeded synthetic stand-ins for the accident table.

Informative columns depend on the severity class; noise columns do not.
Numeric informative columns put class ``c`` at mean ``SEPARATION * pi(c)``
(unit variance) for a per-column random class order ``pi``. Categorical
informative columns give each class a home category drawn with probability
``HOME_PROB``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from .data import Dataset
from .schema import Column, FeatureSchema

SEPARATION = 2.0
HOME_PROB = 0.9
NOISE_SCALE = 2.0
TARGET = "Severity"

# dominant class ~67%, rare class ~1%, as in the real severity distribution
FIG2_WEIGHTS = (0.01, 0.67, 0.28, 0.04)


@dataclass(frozen=True)
class SynthSpec:
    n_rows: int = 2000
    n_informative: int = 20
    n_noise: int = 28
    n_classes: int = 4
    class_weights: tuple | None = None
    categorical_fraction: float = 0.25
    noisy_row_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if self.n_informative < 0 or self.n_noise < 0 or self.n_informative + self.n_noise < 1:
            raise ValueError("need at least one feature column")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if not 0.0 <= self.categorical_fraction <= 1.0:
            raise ValueError("categorical_fraction must lie in [0, 1]")
        if not 0.0 <= self.noisy_row_fraction <= 1.0:
            raise ValueError("noisy_row_fraction must lie in [0, 1]")
        w = self.weights()
        if len(w) != self.n_classes or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise ValueError("class_weights must be n_classes non-negative values summing to 1")

    def weights(self) -> np.ndarray:
        if self.class_weights is not None:
            return np.asarray(self.class_weights, dtype=float)
        if self.n_classes == 4:
            return np.asarray(FIG2_WEIGHTS)
        return np.full(self.n_classes, 1.0 / self.n_classes)


def generate(spec: SynthSpec) -> Dataset:
    """Draw a table whose planted informative columns are listed in ``meta``.

    Rows picked for ``noisy_row_fraction`` get informative values drawn for a
    random decoy class, so they carry no signal but keep the same marginals.
    """
    rng = np.random.default_rng(spec.seed)
    k = spec.n_classes
    weights = spec.weights()
    n = spec.n_rows
    n_features = spec.n_informative + spec.n_noise
    labels = rng.choice(k, size=n, p=weights)

    noisy = np.zeros(n, dtype=bool)
    noisy[rng.permutation(n)[: int(round(spec.noisy_row_fraction * n))]] = True
    decoy = np.where(noisy, rng.choice(k, size=n, p=weights), labels)

    # shuffle which column names carry signal
    names = [f"x{j:02d}" for j in range(n_features)]
    slots = rng.permutation(n_features)
    informative = sorted(names[j] for j in slots[: spec.n_informative])
    n_cat_inf = int(round(spec.categorical_fraction * spec.n_informative))
    n_cat_noise = int(round(spec.categorical_fraction * spec.n_noise))
    n_cats = k + 2

    kinds, cols = {}, {}
    for rank, j in enumerate(slots):
        name = names[j]
        if rank < spec.n_informative:
            order = rng.permutation(k)
            if rank < n_cat_inf:
                home = rng.permutation(n_cats)[:k]
                others = rng.integers(0, n_cats - 1, size=n)
                home_of = home[order[decoy]]
                cats = np.where(others >= home_of, others + 1, others)
                pick = rng.random(n) < HOME_PROB
                cols[name] = np.where(pick, home_of, cats)
                kinds[name] = "categorical"
            else:
                cols[name] = SEPARATION * order[decoy] + rng.standard_normal(n)
                kinds[name] = "numeric"
        else:
            noise_rank = rank - spec.n_informative
            if noise_rank < n_cat_noise:
                cols[name] = rng.integers(0, n_cats, size=n)
                kinds[name] = "categorical"
            else:
                cols[name] = NOISE_SCALE * rng.standard_normal(n)
                kinds[name] = "numeric"

    columns = [Column(TARGET, "numeric", "target")]
    columns += [Column(name, kinds[name]) for name in names]
    frame = {TARGET: pd.array(labels + 1, dtype="Int64")}
    for name in names:
        if kinds[name] == "categorical":
            frame[name] = pd.Series([f"c{v}" for v in cols[name]], dtype=object)
        else:
            frame[name] = cols[name]
    meta = {
        "informative": informative,
        "noise": sorted(set(names) - set(informative)),
        "noisy_rows": int(noisy.sum()),
        "spec": asdict(spec),
    }
    return Dataset(FeatureSchema(tuple(columns)), pd.DataFrame(frame),
                   tuple(range(1, k + 1)), meta)


def inject_missing(d: Dataset, rates, seed: int = 0) -> Dataset:
    """Blank cells independently per column.

    ``rates`` maps column name to probability; a bare number applies to every
    feature column. The target column is never blanked.
    """
    if not isinstance(rates, dict):
        rates = {c.name: float(rates) for c in d.schema.features}
    target = d.schema.target.name
    rng = np.random.default_rng(seed)
    frame = d.frame.copy()
    for name in frame.columns:
        rate = rates.get(name, 0.0)
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"missing rate for {name!r} must lie in [0, 1]")
        if name == target and rate > 0:
            raise ValueError("the target column cannot be blanked")
        hit = rng.random(len(frame)) < rate
        if hit.any():
            col = frame[name]
            frame[name] = col.where(~hit, None) if col.dtype == object else col.mask(hit)
    return Dataset(d.schema, frame, d.classes, dict(d.meta))


def accidents_like_frame(n_rows: int = 300, seed: int = 0,
                         export_spelling: bool = False) -> pd.DataFrame:
    """Raw string table with every column of the default accident schema.

    Values are plausible rather than realistic. Severity shifts distance and
    visibility so models have something to learn; ``Precipitation(in)`` is
    mostly blank and a few other cells are blank so preprocessing has work to
    do. ``export_spelling`` writes headers as the public export does
    (``Start_Time`` rather than ``Start Time``).
    """
    from .schema import us_accidents_schema

    rng = np.random.default_rng(seed)
    n = n_rows
    sev = rng.choice(4, size=n, p=FIG2_WEIGHTS) + 1
    start = (pd.Timestamp("2019-01-01")
             + pd.to_timedelta(rng.integers(0, 365 * 24 * 60, size=n), unit="min"))
    end = start + pd.to_timedelta(rng.integers(10, 300, size=n), unit="min")

    def pick(options, size=n):
        return [options[i] for i in rng.integers(0, len(options), size=size)]

    def num(values, digits=3):
        return [f"{v:.{digits}f}" for v in values]

    lat = rng.uniform(25, 48, n)
    lng = rng.uniform(-124, -70, n)
    cols = {
        "ID": [f"A-{i + 1}" for i in range(n)],
        "Source": pick(["MapQuest", "Bing", "MapQuest-Bing"]),
        "TMC": pick(["201.0", "241.0", "245.0", "229.0"]),
        "Severity": [str(s) for s in sev],
        "Start Time": [t.strftime("%Y-%m-%d %H:%M:%S") for t in start],
        "End Time": [t.strftime("%Y-%m-%d %H:%M:%S") for t in end],
        "Start Lat": num(lat, 5),
        "Start Lng": num(lng, 5),
        "End Lat": num(lat + rng.normal(0, 0.01, n), 5),
        "End Lng": num(lng + rng.normal(0, 0.01, n), 5),
        "Distance(mi)": num(np.abs(0.4 * sev + rng.normal(0, 0.3, n))),
        "Description": pick(["Right lane blocked", "Accident on I-5", "Queueing traffic"]),
        "Number": num(rng.integers(1, 9999, n), 0),
        "Street": pick(["I-5 N", "Main St", "Broadway", "US-101 S", "Elm St"]),
        "Side": pick(["R", "L"]),
        "City": pick(["Dayton", "Austin", "Miami", "Seattle", "Denver"]),
        "County": pick(["Montgomery", "Travis", "Dade", "King", "Denver"]),
        "State": pick(["OH", "TX", "FL", "WA", "CO"]),
        "Zipcode": pick(["45424", "78701", "33101", "98101", "80202"]),
        "Country": ["US"] * n,
        "Timezone": pick(["US/Eastern", "US/Central", "US/Pacific", "US/Mountain"]),
        "Airport Code": pick(["KDAY", "KAUS", "KMIA", "KSEA", "KDEN"]),
        "Weather Timestamp": [t.strftime("%Y-%m-%d %H:%M:%S") for t in start.floor("h")],
        "Temperature(F)": num(rng.normal(60, 15, n), 1),
        "Wind Chill(F)": num(rng.normal(55, 15, n), 1),
        "Humidity(%)": num(rng.uniform(20, 100, n), 0),
        "Pressure(in)": num(rng.normal(29.9, 0.3, n), 2),
        "Visibility(mi)": num(np.clip(10 - 1.5 * sev + rng.normal(0, 1, n), 0, 10), 1),
        "Wind Direction": pick(["N", "S", "E", "W", "Calm", "Variable"]),
        "Wind Speed(mph)": num(rng.gamma(2.0, 4.0, n), 1),
        "Precipitation(in)": num(rng.exponential(0.05, n), 2),
        "Weather Condition": pick(["Clear", "Overcast", "Mostly Cloudy", "Light Rain",
                                   "Fair", "Snow", "Fog"]),
        "Sunrise Sunset": pick(["Day", "Night"]),
        "Civil -Twilight": pick(["Day", "Night"]),
        "Nautical -Twilight": pick(["Day", "Night"]),
        "Astronomical Twilight": pick(["Day", "Night"]),
    }
    for flag in ("Amenity", "Bump", "Crossing", "Give Way", "Junction", "No Exit", "Railway",
                 "Roundabout", "Station", "Stop", "Traffic Calming", "Traffic Signal",
                 "Turning Loop"):
        cols[flag] = list(np.where(rng.random(n) < 0.1, "True", "False"))
    frame = pd.DataFrame({c.name: cols[c.name] for c in us_accidents_schema().columns})

    blank = rng.random(n) < 0.9
    frame.loc[blank, "Precipitation(in)"] = ""
    for name in ("Wind Chill(F)", "Number", "TMC"):
        frame.loc[rng.random(n) < 0.03, name] = ""
    if export_spelling:
        frame.columns = [c.replace(" -", "_").replace(" ", "_") for c in frame.columns]
    return frame
