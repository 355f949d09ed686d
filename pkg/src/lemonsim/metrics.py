"""Disclosure indices and panel utilities.

The washing index intentionally uses the composite form
``ln(1 + tone * n_total)`` rather than the algebraically reduced
``ln(1 + n_descriptive)`` so that the reduction itself stays a testable
property instead of a baked-in assumption.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .agents import DisclosureRecord


@dataclass
class PanelCell:
    """One firm-period observation of disclosure behaviour and green output."""
    firm_id: int
    industry_id: int
    period: int
    disclosure: DisclosureRecord
    washing_index: float | None = None
    green_output: int = 0


def ai_tone(rec: DisclosureRecord) -> float:
    """Share of descriptive statements; zero for an empty disclosure."""
    if rec.n_total == 0:
        return 0.0
    return rec.n_descriptive / rec.n_total


def washing_index(rec: DisclosureRecord) -> float:
    return math.log1p(ai_tone(rec) * rec.n_total)


def washing_index_from_counts(n_descriptive) -> np.ndarray:
    """Vector form of the washing index via the reduced expression."""
    return np.log1p(np.asarray(n_descriptive, dtype=float))


def peer_washing_index(indices: Mapping[int, float],
                       industries: Mapping[int, int],
                       focal: int) -> float:
    """Mean washing index of same-industry firms, excluding the focal firm."""
    ind = industries[focal]
    peers = [indices[f] for f, g in industries.items() if g == ind and f != focal]
    if not peers:
        raise ValueError(f"no peers: firm {focal} is alone in industry {ind}")
    return sum(peers) / len(peers)


def peer_means_excluding_self(values: np.ndarray,
                              groups: np.ndarray) -> np.ndarray:
    """Per-element mean of same-group values with the element left out.

    Raises if any group has a single member, since leave-one-out is undefined
    there.
    """
    values = np.asarray(values, dtype=float)
    groups = np.asarray(groups)
    uniq, inverse, counts = np.unique(groups, return_inverse=True,
                                      return_counts=True)
    if (counts < 2).any():
        lonely = uniq[counts < 2][0]
        raise ValueError(f"no peers: group {lonely!r} has a single member")
    sums = np.zeros(len(uniq))
    np.add.at(sums, inverse, values)
    return (sums[inverse] - values) / (counts[inverse] - 1)


def panel_peer_indices(panel: Sequence[PanelCell]) -> dict[tuple[int, int], float]:
    """Peer washing index for every (firm, period) cell of a panel.

    Peers are same-industry firms in the same period.  Cells must already
    carry a washing index.
    """
    out: dict[tuple[int, int], float] = {}
    by_period: dict[int, list[PanelCell]] = {}
    for cell in panel:
        by_period.setdefault(cell.period, []).append(cell)
    for period, cells in by_period.items():
        vals = np.array([_cell_index(c) for c in cells])
        grp = np.array([c.industry_id for c in cells])
        try:
            peers = peer_means_excluding_self(vals, grp)
        except ValueError as e:
            raise ValueError(f"{e} (period {period})") from None
        for cell, pv in zip(cells, peers):
            out[(cell.firm_id, cell.period)] = float(pv)
    return out


def _cell_index(cell: PanelCell) -> float:
    if cell.washing_index is not None:
        return cell.washing_index
    return washing_index(cell.disclosure)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation; errors on degenerate (zero-variance) input."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("pearson: length mismatch")
    if len(x) < 3:
        raise ValueError("pearson: need at least 3 observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("degenerate series: zero variance")
    return float(np.corrcoef(x, y)[0, 1])


def panel_correlation(panel: Sequence[PanelCell],
                      x_sel: Callable[[PanelCell], float],
                      y_sel: Callable[[PanelCell], float]) -> float:
    xs = [x_sel(c) for c in panel]
    ys = [y_sel(c) for c in panel]
    return pearson(xs, ys)


# --- panel CSV interface -------------------------------------------------

PANEL_COLUMNS = ("firm_id", "industry_id", "period", "n_descriptive",
                 "n_substantive", "washing_index", "peer_washing_index",
                 "green_output")


def read_panel_csv(path: str) -> tuple[list[PanelCell], dict[tuple[int, int], float]]:
    """Read a firm-period panel; returns cells plus any peer values present.

    The header must match ``PANEL_COLUMNS`` exactly; the error names the first
    unexpected column so typos are easy to spot.  Index columns may be blank,
    in which case they are treated as not-yet-computed.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty panel file") from None
        for got, want in zip(header, PANEL_COLUMNS):
            if got != want:
                raise ValueError(f"{path}: unexpected column {got!r} "
                                 f"(expected {want!r})")
        if len(header) != len(PANEL_COLUMNS):
            extra = header[len(PANEL_COLUMNS):] or ["<missing>"]
            raise ValueError(f"{path}: unexpected column {extra[0]!r}")

        cells: list[PanelCell] = []
        peers: dict[tuple[int, int], float] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(PANEL_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected "
                                 f"{len(PANEL_COLUMNS)} fields, got {len(row)}")
            fid, ind, per = int(row[0]), int(row[1]), int(row[2])
            rec = DisclosureRecord(int(row[3]), int(row[4]))
            wi = float(row[5]) if row[5] != "" else None
            cells.append(PanelCell(fid, ind, per, rec, washing_index=wi,
                                   green_output=int(row[7])))
            if row[6] != "":
                peers[(fid, per)] = float(row[6])
        return cells, peers


def write_panel_csv(path: str, cells: Iterable[PanelCell],
                    peers: Mapping[tuple[int, int], float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PANEL_COLUMNS)
        for c in cells:
            wi = _cell_index(c)
            pv = peers.get((c.firm_id, c.period))
            writer.writerow([
                c.firm_id, c.industry_id, c.period,
                c.disclosure.n_descriptive, c.disclosure.n_substantive,
                f"{wi:.8g}",
                "" if pv is None else f"{pv:.8g}",
                c.green_output,
            ])
