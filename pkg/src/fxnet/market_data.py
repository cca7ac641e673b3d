"""Price-panel ingestion, alignment and log-return computation."""

from __future__ import annotations

import csv
import datetime
import io
import math
from dataclasses import dataclass, replace

import numpy as np

MARKET_CLASSES = ("developed", "emerging", "frontier")

DEFAULT_FILL_LIMIT = 5
PEG_GUARD_SIGMA = 1e-10


class PanelError(ValueError):
    """Malformed or inconsistent panel input."""


class PeggedAssetError(PanelError):
    """An asset's return series has (near) zero variance."""


@dataclass(frozen=True)
class AssetMeta:
    index: int
    code: str
    name: str
    market_class: str
    region: str


@dataclass(frozen=True)
class PricePanel:
    """Aligned positive daily rates, one row per asset, one column per date."""

    assets: tuple[AssetMeta, ...]
    dates: tuple[datetime.date, ...]
    prices: np.ndarray  # N x (T+1)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_dates(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnPanel:
    """Log-returns per asset plus the per-asset volatility of the raw returns."""

    assets: tuple[AssetMeta, ...]
    returns: np.ndarray  # N x T
    sigma: np.ndarray  # length N, pre-normalization volatility
    normalized: bool

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_steps(self) -> int:
        return self.returns.shape[1]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def parse_asset_metadata(text: str) -> dict[str, AssetMeta]:
    """Parse `index,code,name,market_class,region` rows into a code -> meta map."""
    reader = csv.DictReader(io.StringIO(text))
    expected = ["index", "code", "name", "market_class", "region"]
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
        raise PanelError(
            f"metadata header must be {','.join(expected)!r}, got {reader.fieldnames}"
        )
    metas: dict[str, AssetMeta] = {}
    indices: list[int] = []
    for row in reader:
        code = row["code"].strip()
        if not code:
            raise PanelError("empty asset code in metadata")
        if code in metas:
            raise PanelError(f"duplicate asset code in metadata: {code}")
        market_class = row["market_class"].strip().lower()
        if market_class not in MARKET_CLASSES:
            raise PanelError(
                f"unknown market class {row['market_class']!r} for {code}"
            )
        try:
            index = int(row["index"])
        except ValueError as exc:
            raise PanelError(f"non-integer index for {code}: {row['index']!r}") from exc
        indices.append(index)
        metas[code] = AssetMeta(
            index=index,
            code=code,
            name=row["name"].strip(),
            market_class=market_class,
            region=row["region"].strip(),
        )
    if not metas:
        raise PanelError("metadata file contains no assets")
    if sorted(indices) != list(range(1, len(indices) + 1)):
        raise PanelError("metadata indices must be unique and contiguous from 1")
    return metas


def parse_price_panel(
    raw_table: str,
    meta: str,
    fill_limit: int = DEFAULT_FILL_LIMIT,
) -> PricePanel:
    """Parse a `date,CODE1,CODE2,...` price table against its metadata table.

    Short quote gaps are forward-filled (at most `fill_limit` consecutive rows
    per asset); dates still incomplete after filling are dropped so that the
    surviving panel stays cross-sectionally aligned.
    """
    metas = parse_asset_metadata(meta)
    reader = csv.reader(io.StringIO(raw_table))
    try:
        header = next(reader)
    except StopIteration:
        raise PanelError("empty price table") from None
    if not header or header[0].strip().lower() != "date":
        raise PanelError("price table header must start with 'date'")
    codes = [c.strip() for c in header[1:]]
    if len(codes) < 2:
        raise PanelError("price table must contain at least 2 assets")
    for code in codes:
        if code not in metas:
            raise PanelError(f"unknown asset code in price table: {code}")
    if len(set(codes)) != len(codes):
        raise PanelError("duplicate asset column in price table")

    n = len(codes)
    dates: list[datetime.date] = []
    rows: list[list[float]] = []
    last_value: list[float | None] = [None] * n
    gap_run: list[int] = [0] * n
    seen_dates: set[datetime.date] = set()
    prev_date: datetime.date | None = None

    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != n + 1:
            raise PanelError(f"line {lineno}: expected {n + 1} fields, got {len(row)}")
        try:
            date = datetime.date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise PanelError(f"line {lineno}: bad date {row[0]!r}") from exc
        if date in seen_dates:
            raise PanelError(f"duplicate date {date.isoformat()}")
        if prev_date is not None and date <= prev_date:
            raise PanelError(f"dates not strictly increasing at {date.isoformat()}")
        seen_dates.add(date)
        prev_date = date

        values: list[float] = []
        complete = True
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell:
                try:
                    price = float(cell)
                except ValueError as exc:
                    raise PanelError(
                        f"line {lineno}: non-numeric price {cell!r} for {codes[j]}"
                    ) from exc
                if not math.isfinite(price) or price <= 0:
                    raise PanelError(
                        f"line {lineno}: non-positive price {cell!r} for {codes[j]}"
                    )
                last_value[j] = price
                gap_run[j] = 0
                values.append(price)
            else:
                gap_run[j] += 1
                if last_value[j] is not None and gap_run[j] <= fill_limit:
                    values.append(last_value[j])
                else:
                    complete = False
                    values.append(float("nan"))
        if complete:
            dates.append(date)
            rows.append(values)

    if len(dates) < 3:
        raise PanelError(f"only {len(dates)} complete dates survive alignment, need >= 3")

    assets = tuple(metas[c] for c in codes)
    prices = _freeze(np.array(rows, dtype=float).T)
    return PricePanel(assets=assets, dates=tuple(dates), prices=prices)


def compute_log_returns(
    panel: PricePanel,
    delta: int = 1,
    peg_guard: float = PEG_GUARD_SIGMA,
    population: bool = True,
) -> ReturnPanel:
    """Sliding log-returns over `delta` rows, with per-asset volatility.

    Volatility uses the population convention by default (divide by T).
    """
    if delta < 1:
        raise PanelError(f"delta must be >= 1, got {delta}")
    if panel.n_dates < delta + 2:
        raise PanelError(
            f"panel has {panel.n_dates} dates, need at least {delta + 2} for delta={delta}"
        )
    logp = np.log(panel.prices)
    returns = logp[:, delta:] - logp[:, :-delta]
    ddof = 0 if population else 1
    sigma = returns.std(axis=1, ddof=ddof)
    pegged = np.flatnonzero(sigma < peg_guard)
    if pegged.size:
        codes = ", ".join(panel.assets[i].code for i in pegged)
        raise PeggedAssetError(
            f"near-constant return series (sigma < {peg_guard:g}) for: {codes}"
        )
    return ReturnPanel(
        assets=panel.assets,
        returns=_freeze(returns),
        sigma=_freeze(sigma),
        normalized=False,
    )


def normalize_returns(rp: ReturnPanel, peg_guard: float = PEG_GUARD_SIGMA) -> ReturnPanel:
    """Divide each return row by its own volatility; retains the original sigma."""
    if rp.normalized:
        raise PanelError("return panel is already normalized")
    if np.any(rp.sigma < peg_guard):
        bad = np.flatnonzero(rp.sigma < peg_guard)
        codes = ", ".join(rp.assets[i].code for i in bad)
        raise PeggedAssetError(f"cannot normalize zero-volatility series for: {codes}")
    return replace(rp, returns=_freeze(rp.returns / rp.sigma[:, None]), normalized=True)
