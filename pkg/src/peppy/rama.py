"""Ramachandran maps: steric feasibility of the model and observed histograms."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .chainmodel import BackboneGeometry, Conformation, build_topology, default_config, wrap_angle
from .errors import BadBinning, BadFormat
from .geometry import PhysicalScale, forward_kinematics_vector
from . import kernels

HISTOGRAM = "histogram"
FEASIBILITY = "feasibility"
DEFAULT_BIN = 10.0
CSV_COLUMNS = ("phi_center", "psi_center", "value")


def _check_bin(bin_width):
    try:
        bw = float(bin_width)
    except (TypeError, ValueError):
        raise BadBinning(f"bin width {bin_width!r} is not a number") from None
    if not bw > 0 or not math.isfinite(bw):
        raise BadBinning(f"bin width must be positive, got {bin_width}")
    cells = 360.0 / bw
    if abs(cells - round(cells)) > 1e-9:
        raise BadBinning(f"bin width {bin_width} does not divide 360")
    return bw, int(round(cells))


@dataclass(frozen=True, eq=False)
class RamaMap:
    """Grid over phi (axis 0) and psi (axis 1), both starting at -180.

    Cells are half-open, ``[lo, lo + bin_width)``.
    """

    bin_width: float
    values: np.ndarray
    mode: str = HISTOGRAM
    source: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        bw, n = _check_bin(self.bin_width)
        object.__setattr__(self, "bin_width", bw)
        if self.mode not in (HISTOGRAM, FEASIBILITY):
            raise ValueError(f"unknown map mode {self.mode!r}")
        dtype = bool if self.mode == FEASIBILITY else np.int64
        v = np.array(self.values, dtype=dtype)
        if v.shape != (n, n):
            raise BadBinning(f"grid {v.shape} does not match bin width {bw} ({n}x{n})")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_bins(self):
        return self.values.shape[0]

    def centers(self):
        return -180.0 + (np.arange(self.n_bins) + 0.5) * self.bin_width

    def cell(self, phi, psi):
        """Indices of the cell holding (phi, psi)."""
        return self._index(phi), self._index(psi)

    def _index(self, angle):
        k = int(math.floor((wrap_angle(angle) + 180.0) / self.bin_width))
        return min(k, self.n_bins - 1)

    def __getitem__(self, angles):
        return self.values[self.cell(*angles)]

    def total(self):
        return int(self.values.sum())

    def __eq__(self, other):
        if not isinstance(other, RamaMap):
            return NotImplemented
        return (self.bin_width == other.bin_width and self.mode == other.mode
                and np.array_equal(self.values, other.values))

    __hash__ = None


def _sweep_positions(geom: BackboneGeometry, t, base, k_phi, k_psi, phi_c, psi_c):
    angles = base.copy()
    angles[k_phi] = phi_c
    angles[k_psi] = psi_c
    return forward_kinematics_vector(t, geom, angles)


def feasibility_map(probe="AAA", s: PhysicalScale | None = None, bin_width=DEFAULT_BIN,
                    config=None) -> RamaMap:
    """Cell is feasible when the probe, central residue at the cell centre, has no clash.

    The other residues keep the flank conformation (extended by default).
    """
    bw, nb = _check_bin(bin_width)
    s = s or PhysicalScale()
    config = config or default_config()
    t = build_topology(probe, config)
    n = t.n_residues
    if n < 3:
        raise ValueError("probe needs at least 3 residues")
    mid = n // 2
    flank_phi, flank_psi = config.conformations[config.conformations.flank].pairs[0]
    base = Conformation.from_pairs([(flank_phi, flank_psi)] * n).vector()
    k_phi = mid - 1  # phi(mid) sits at position mid-1 (phi of residue 0 is absent)
    k_psi = (n - 1) + mid
    radii = s.atom_radii(t)
    excluded = np.ascontiguousarray(t.exclusion_mask, dtype=np.uint8)
    centers = -180.0 + (np.arange(nb) + 0.5) * bw
    feasible = np.zeros((nb, nb), dtype=bool)
    for a, phi_c in enumerate(centers):
        for b, psi_c in enumerate(centers):
            pos = _sweep_positions(config.backbone, t, base, k_phi, k_psi, phi_c, psi_c)
            i, _, _ = kernels.clash_pairs(pos, radii, excluded, s.radius_factor)
            feasible[a, b] = len(i) == 0
    return RamaMap(bw, feasible, FEASIBILITY, f"{t.sequence_string} at {s.radius_factor} R_vdW")


def histogram(confs: Iterable[Conformation], bin_width=DEFAULT_BIN, source: str = "") -> RamaMap:
    """Count every residue whose phi and psi are both present."""
    bw, nb = _check_bin(bin_width)
    counts = np.zeros((nb, nb), dtype=np.int64)
    m = RamaMap(bw, counts, HISTOGRAM, source)
    counts = counts.copy()
    for c in confs:
        for phi, psi in c.pairs():
            if phi is None or psi is None:
                continue
            counts[m.cell(phi, psi)] += 1
    return RamaMap(bw, counts, HISTOGRAM, source)


@dataclass(frozen=True)
class Discrepancy:
    phi_center: float
    psi_center: float
    count: int


@dataclass(frozen=True)
class Comparison:
    score: float
    discrepancies: tuple[Discrepancy, ...]


def compare(observed: RamaMap, feasible: RamaMap) -> Comparison:
    """Fraction of observed counts inside feasible cells, plus the misses by count.

    An empty histogram scores 0.
    """
    if observed.bin_width != feasible.bin_width:
        raise BadBinning(f"bin widths differ: {observed.bin_width} vs {feasible.bin_width}")
    obs = observed.values.astype(float)
    ok = feasible.values.astype(bool)
    total = obs.sum()
    score = float(obs[ok].sum() / total) if total > 0 else 0.0
    c = observed.centers()
    misses = [
        Discrepancy(float(c[a]), float(c[b]), int(observed.values[a, b]))
        for a, b in zip(*np.nonzero((observed.values > 0) & ~ok))
    ]
    misses.sort(key=lambda d: (-d.count, d.phi_center, d.psi_center))
    return Comparison(score, tuple(misses))


def _fmt(x):
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def export_map(m: RamaMap, fmt: str) -> bytes:
    """``csv``: header plus one row per cell. ``pgm``: binary P5, psi up, phi right."""
    fmt = fmt.lower()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        c = m.centers()
        for a in range(m.n_bins):
            for b in range(m.n_bins):
                w.writerow((_fmt(c[a]), _fmt(c[b]), int(m.values[a, b])))
        return buf.getvalue().encode("utf-8")
    if fmt in ("pgm", "pgm-image"):
        v = m.values.astype(float)
        peak = v.max()
        scaled = np.zeros_like(v) if peak <= 0 else np.rint(v / peak * 255.0)
        raster = scaled.T[::-1].astype(np.uint8)  # rows: psi high to low; columns: phi
        header = f"P5\n{m.n_bins} {m.n_bins}\n255\n".encode("ascii")
        return header + raster.tobytes()
    raise BadFormat(f"unknown map format {fmt!r}")


def import_map_csv(data, mode: str = HISTOGRAM, source: str = "") -> RamaMap:
    """Inverse of ``export_map(m, "csv")``; bin width comes from the row count."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise BadFormat("missing phi_center,psi_center,value header")
    body = rows[1:]
    nb = math.isqrt(len(body))
    if nb == 0 or nb * nb != len(body):
        raise BadBinning(f"{len(body)} rows is not a square grid")
    bw = 360.0 / nb
    values = np.zeros((nb, nb), dtype=np.int64)
    probe = RamaMap(bw, values, HISTOGRAM)
    for phi, psi, value in body:
        values[probe.cell(float(phi), float(psi))] = int(value)
    return RamaMap(bw, values, mode, source)


def region_fraction(m: RamaMap, phi_range, psi_range) -> float:
    """Share of histogram counts whose cell centre lies in the open box."""
    c = m.centers()
    in_phi = (c > phi_range[0]) & (c < phi_range[1])
    in_psi = (c > psi_range[0]) & (c < psi_range[1])
    total = m.values.sum()
    return float(m.values[np.ix_(in_phi, in_psi)].sum() / total) if total else 0.0
