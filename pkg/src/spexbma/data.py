"""Site metadata, coordinate normalization and annual-maxima datasets.

The on-disk format is plain delimited text: one sites file with columns
``id,lat,lon,alt`` and one values file whose header row is ``year`` followed
by the site ids, with one row of annual maxima per year. Lines starting with
``#`` are ignored on input; outputs use them to embed the resolved run
configuration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DegenerateExtentError, SchemaError


@dataclass(frozen=True)
class Site:
    """One grid-cell center with raw and [0,1]-normalized coordinates."""

    id: str
    lat: float
    lon: float
    alt: float = 0.0
    norm_lat: float | None = None
    norm_lon: float | None = None
    norm_alt: float | None = None

    @property
    def is_normalized(self) -> bool:
        return self.norm_lat is not None and self.norm_lon is not None


@dataclass(frozen=True)
class CoordRanges:
    """Affine normalization constants: value -> (value - lo) / (hi - lo)."""

    lat: tuple[float, float]
    lon: tuple[float, float]
    alt: tuple[float, float] | None

    def apply(self, site: Site) -> Site:
        nlat = (site.lat - self.lat[0]) / (self.lat[1] - self.lat[0])
        nlon = (site.lon - self.lon[0]) / (self.lon[1] - self.lon[0])
        if self.alt is None:
            nalt = 0.0
        else:
            nalt = (site.alt - self.alt[0]) / (self.alt[1] - self.alt[0])
        return replace(site, norm_lat=nlat, norm_lon=nlon, norm_alt=nalt)


class NormalizedSites(Sequence):
    """Sites with norm_* filled, retaining the constants for reuse."""

    def __init__(self, sites: Sequence[Site], ranges: CoordRanges):
        self.sites = tuple(sites)
        self.ranges = ranges

    def __len__(self):
        return len(self.sites)

    def __getitem__(self, i):
        return self.sites[i]

    def __iter__(self):
        return iter(self.sites)

    def extend_to(self, new_sites: Sequence[Site]) -> tuple[Site, ...]:
        """Normalize further sites with the constants of this collection."""
        return tuple(self.ranges.apply(s) for s in new_sites)


def normalize_coords(sites: Sequence[Site]) -> NormalizedSites:
    """Map latitude/longitude (and altitude when it varies) onto [0, 1].

    The minimum of each coordinate maps to 0 and the maximum to 1, affine
    in between. Latitude and longitude must each take at least two distinct
    values; a constant altitude column is normalized to all zeros since
    altitude is an optional basis term.

    Raises
    ------
    DegenerateExtentError
        If all latitudes or all longitudes coincide.
    """
    if len(sites) < 2:
        raise DegenerateExtentError("need at least 2 sites to normalize coordinates")
    lats = [s.lat for s in sites]
    lons = [s.lon for s in sites]
    alts = [s.alt for s in sites]
    if min(lats) == max(lats):
        raise DegenerateExtentError("all latitudes equal; cannot normalize")
    if min(lons) == max(lons):
        raise DegenerateExtentError("all longitudes equal; cannot normalize")
    alt_range = None if min(alts) == max(alts) else (min(alts), max(alts))
    ranges = CoordRanges(lat=(min(lats), max(lats)), lon=(min(lons), max(lons)), alt=alt_range)
    return NormalizedSites([ranges.apply(s) for s in sites], ranges)


def site_distances(sites: Sequence[Site]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All site pairs (i < j) and their Euclidean distances in normalized
    coordinate space. Returns (pair_i, pair_j, h)."""
    for s in sites:
        if not s.is_normalized:
            raise SchemaError(f"site {s.id} has no normalized coordinates")
    k = len(sites)
    pi, pj = np.triu_indices(k, 1)
    xy = np.array([[s.norm_lat, s.norm_lon] for s in sites])
    h = np.hypot(xy[pi, 0] - xy[pj, 0], xy[pi, 1] - xy[pj, 1])
    return pi.astype(np.int64), pj.astype(np.int64), h


@dataclass(frozen=True)
class Dataset:
    """Annual-maxima matrix (years x sites) for one data source."""

    source: str
    sites: tuple[Site, ...]
    years: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "years", tuple(self.years))
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise SchemaError(f"values must be 2-D (years x sites), got shape {v.shape}")
        if v.shape != (len(self.years), len(self.sites)):
            raise SchemaError(
                f"values shape {v.shape} does not match "
                f"{len(self.years)} years x {len(self.sites)} sites")
        if not np.all(np.isfinite(v)):
            raise SchemaError("values contain non-finite entries")

    @property
    def n_years(self) -> int:
        return len(self.years)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def site_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sites)

    def with_values(self, values: np.ndarray, years=None) -> "Dataset":
        return Dataset(source=self.source, sites=self.sites,
                       years=self.years if years is None else tuple(years),
                       values=values)


def _read_rows(path) -> list[list[str]]:
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.reader(fh):
            if not raw or raw[0].lstrip().startswith("#"):
                continue
            rows.append([c.strip() for c in raw])
    return rows


def load_sites(path) -> list[Site]:
    """Read a sites file (columns id, lat, lon, alt)."""
    rows = _read_rows(path)
    if not rows or [c.lower() for c in rows[0][:4]] != ["id", "lat", "lon", "alt"]:
        raise SchemaError(f"{path}: expected header 'id,lat,lon,alt'")
    sites = []
    seen = set()
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise SchemaError(f"{path}: line {ln}: expected 4 columns, got {len(row)}")
        sid = row[0]
        if sid in seen:
            raise SchemaError(f"{path}: line {ln}: duplicate site id '{sid}'")
        seen.add(sid)
        try:
            lat, lon, alt = (float(c) for c in row[1:4])
        except ValueError as e:
            raise SchemaError(f"{path}: line {ln}: non-numeric coordinate: {e}") from e
        sites.append(Site(id=sid, lat=lat, lon=lon, alt=alt))
    if not sites:
        raise SchemaError(f"{path}: no sites found")
    return sites


def load_dataset(values_path, sites_path, source: str | None = None,
                 normalize: bool = True) -> Dataset:
    """Load and cross-validate a values file against its sites file.

    Checks the matrix shape, finiteness and nonnegativity of every cell,
    rejects duplicate years, and requires the values header ids to match
    the sites file exactly (same set, any order; columns are reordered to
    the sites-file order).
    """
    sites = load_sites(sites_path)
    by_id = {s.id: s for s in sites}
    rows = _read_rows(values_path)
    if not rows:
        raise SchemaError(f"{values_path}: empty file")
    header = rows[0]
    if not header or header[0].lower() != "year":
        raise SchemaError(f"{values_path}: first header column must be 'year'")
    ids = header[1:]
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise SchemaError(f"{values_path}: unknown site id(s) in header: {missing}")
    absent = [s.id for s in sites if s.id not in ids]
    if absent:
        raise SchemaError(f"{values_path}: header missing site id(s): {absent}")
    years: list[int] = []
    data = []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != len(ids) + 1:
            raise SchemaError(
                f"{values_path}: line {ln}: expected {len(ids) + 1} columns, got {len(row)}")
        try:
            year = int(row[0])
        except ValueError as e:
            raise SchemaError(f"{values_path}: line {ln}: bad year '{row[0]}'") from e
        if year in years:
            raise SchemaError(f"{values_path}: line {ln}: duplicate year {year}")
        years.append(year)
        vals = []
        for col, cell in enumerate(row[1:], start=2):
            try:
                v = float(cell)
            except ValueError as e:
                raise SchemaError(
                    f"{values_path}: line {ln}, column {col}: non-numeric '{cell}'") from e
            if not np.isfinite(v):
                raise SchemaError(f"{values_path}: line {ln}, column {col}: non-finite value")
            if v < 0:
                raise SchemaError(
                    f"{values_path}: line {ln}, column {col}: negative value {v}")
            vals.append(v)
        data.append(vals)
    if not data:
        raise SchemaError(f"{values_path}: no data rows")
    arr = np.array(data)
    # reorder columns to the sites-file order
    order = [ids.index(s.id) for s in sites]
    arr = arr[:, order]
    site_seq: Sequence[Site] = sites
    if normalize:
        site_seq = normalize_coords(sites)
    return Dataset(source=source or str(values_path), sites=tuple(site_seq),
                   years=tuple(years), values=arr)


def write_sites(sites: Sequence[Site], path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["id", "lat", "lon", "alt"])
        for s in sites:
            w.writerow([s.id, repr(s.lat), repr(s.lon), repr(s.alt)])


def write_dataset(ds: Dataset, path, header_comment: str | None = None) -> None:
    """Write the values matrix in the ingestion format."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["year", *ds.site_ids])
        for year, row in zip(ds.years, ds.values):
            w.writerow([year, *[repr(float(v)) for v in row]])
