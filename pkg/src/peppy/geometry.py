"""Forward kinematics, steric checks, H-bond detection and metrology.

Everything here works in angstrom; :class:`PhysicalScale` converts to the
printed model's inches.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .chainmodel import (
    ATOM_NAMES,
    ATOMS_PER_RESIDUE,
    BackboneGeometry,
    ChainTopology,
    Conformation,
    SideChainClass,
    default_config,
)
from .errors import BadFeature, ShapeMismatch

INCHES_PER_ANGSTROM = 0.3676
RADIUS_FACTOR = 0.7
HBOND_CUTOFF = 3.5
HBOND_MIN_ANGLE = 120.0


def _default_radii():
    return dict(default_config().vdw_radii)


@dataclass(frozen=True)
class PhysicalScale:
    """Fabrication scale: inch/angstrom factor and hard-sphere radii."""

    inches_per_angstrom: float = INCHES_PER_ANGSTROM
    radius_factor: float = RADIUS_FACTOR
    vdw_radii: Mapping[str, float] = field(default_factory=_default_radii)

    def __post_init__(self):
        if not self.inches_per_angstrom > 0:
            raise ValueError("inches_per_angstrom must be positive")
        if not 0 < self.radius_factor <= 1:
            raise ValueError("radius_factor must be in (0, 1]")
        if any(not r > 0 for r in self.vdw_radii.values()):
            raise ValueError("all radii must be positive")

    def __hash__(self):
        return hash((self.inches_per_angstrom, self.radius_factor, tuple(sorted(self.vdw_radii.items()))))

    def to_physical(self, angstrom):
        return angstrom * self.inches_per_angstrom

    def from_physical(self, inches):
        return inches / self.inches_per_angstrom

    def atom_radii(self, topology: ChainTopology):
        """Unscaled van der Waals radius of every atom; SC uses the residue's plug radius."""
        radii = np.empty(len(topology.atoms))
        for k, atom in enumerate(topology.atoms):
            if atom.name == "SC":
                res = topology.sequence[atom.residue_index]
                if res.side_chain_class is SideChainClass.HYDROGEN:
                    radii[k] = self.vdw_radii["H"]
                else:
                    radii[k] = res.side_chain_radius
            else:
                radii[k] = self.vdw_radii[atom.element]
        return radii

    def with_radius_factor(self, factor):
        return PhysicalScale(self.inches_per_angstrom, factor, dict(self.vdw_radii))


def to_physical(length_in_angstrom, scale: PhysicalScale | None = None):
    """Angstrom to inches on the printed model."""
    return (scale or PhysicalScale()).to_physical(length_in_angstrom)


def from_physical(inches, scale: PhysicalScale | None = None):
    return (scale or PhysicalScale()).from_physical(inches)


class AtomSites:
    """Read-only (n_atoms, 3) coordinate array in angstrom."""

    __slots__ = ("positions",)

    def __init__(self, positions):
        pos = np.array(positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ShapeMismatch(f"positions must be (n, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("non-finite coordinates")
        pos.setflags(write=False)
        self.positions = pos

    def __len__(self):
        return len(self.positions)

    def transformed(self, rotation, translation):
        return AtomSites(self.positions @ np.asarray(rotation).T + np.asarray(translation))


def _geom_vector(g: BackboneGeometry):
    values = dict(g.as_dict(), ca_n_h=g.ca_n_h, omega=g.omega_deg)
    return np.array([values[k] for k in kernels.GEOM_FIELDS], dtype=float)


def _side_chain_lengths(t: ChainTopology, g: BackboneGeometry):
    return np.array(
        [g.ca_ha if r.side_chain_class is SideChainClass.HYDROGEN else g.ca_sc for r in t.sequence]
    )


def bond_length(t: ChainTopology, g: BackboneGeometry, a: int, b: int):
    """Configured length of bond (a, b)."""
    names = {t.atoms[a].name, t.atoms[b].name}
    if names == {"N", "CA"}:
        return g.n_ca
    if names == {"CA", "C"}:
        return g.ca_c
    if names == {"C", "N"}:
        return g.c_n
    if names == {"C", "O"}:
        return g.c_o
    if names == {"N", "H"}:
        return g.n_h
    if names == {"CA", "HA"}:
        return g.ca_ha
    if names == {"CA", "SC"}:
        res = t.sequence[t.atoms[a].residue_index]
        return g.ca_ha if res.side_chain_class is SideChainClass.HYDROGEN else g.ca_sc
    raise KeyError(f"no bond between {names}")


def forward_kinematics(t: ChainTopology, g: BackboneGeometry, c: Conformation) -> AtomSites:
    """Place every atom from the dihedrals by internal-coordinate chain extension.

    Residue 1's N sits at the origin with CA on +x and C in the z = 0 plane.
    """
    n = t.n_residues
    if len(c) != n:
        raise ShapeMismatch(f"conformation has {len(c)} residues, topology has {n}")
    phi = np.array([g.terminal_phi_deg if v is None else v for v in c.phi])
    psi = np.array([g.terminal_psi_deg if v is None else v for v in c.psi])
    pos = kernels.build_chain(phi, psi, _geom_vector(g), _side_chain_lengths(t, g))
    return AtomSites(pos)


def forward_kinematics_vector(t: ChainTopology, g: BackboneGeometry, angles):
    """Fast path used by the minimizer: angles in rotatable-dihedral order, raw array out."""
    n = t.n_residues
    angles = np.asarray(angles, dtype=float)
    phi = np.empty(n)
    psi = np.empty(n)
    phi[0] = g.terminal_phi_deg
    psi[n - 1] = g.terminal_psi_deg
    phi[1:] = angles[: n - 1]
    psi[: n - 1] = angles[n - 1 :]
    return kernels.build_chain(phi, psi, _geom_vector(g), _side_chain_lengths(t, g))


@dataclass(frozen=True)
class Clash:
    i: int
    j: int
    distance: float
    overlap: float


@dataclass(frozen=True)
class ClashReport:
    clashes: tuple[Clash, ...] = ()

    @property
    def total_overlap(self):
        return float(sum(c.overlap for c in self.clashes))

    def __len__(self):
        return len(self.clashes)

    def pairs(self):
        return [(c.i, c.j) for c in self.clashes]


def detect_clashes(a: AtomSites, t: ChainTopology, s: PhysicalScale | None = None) -> ClashReport:
    """Every pair more than three bonds apart that overlaps at ``radius_factor * R_vdW``."""
    s = s or PhysicalScale()
    if len(a) != len(t.atoms):
        raise ShapeMismatch("atom sites and topology differ in length")
    radii = s.atom_radii(t)
    i, j, d = kernels.clash_pairs(a.positions, radii, t.exclusion_mask, s.radius_factor)
    limit = s.radius_factor * (radii[i] + radii[j])
    return ClashReport(
        tuple(Clash(int(p), int(q), float(dd), float(lim - dd)) for p, q, dd, lim in zip(i, j, d, limit))
    )


@dataclass(frozen=True)
class HBond:
    donor: int  # residue index (0-based) providing N-H
    acceptor: int  # residue index (0-based) providing O
    distance: float  # O-N, angstrom
    angle: float  # N-H...O, degrees


@dataclass(frozen=True)
class HBondSet:
    bonds: tuple[HBond, ...] = ()

    def __len__(self):
        return len(self.bonds)

    def pairs(self):
        return [(b.donor, b.acceptor) for b in self.bonds]

    def mean_distance(self):
        return float(np.mean([b.distance for b in self.bonds])) if self.bonds else float("nan")


def hbond_candidates(t: ChainTopology, min_separation=3):
    """Atom indices (O of acceptor j, N of donor i) for all |i - j| >= min_separation."""
    n = t.n_residues
    o_idx, n_idx = [], []
    for i in range(n):
        for j in range(n):
            if abs(i - j) >= min_separation:
                o_idx.append(j * ATOMS_PER_RESIDUE + ATOM_NAMES.index("O"))
                n_idx.append(i * ATOMS_PER_RESIDUE + ATOM_NAMES.index("N"))
    return np.array(o_idx, dtype=np.int64), np.array(n_idx, dtype=np.int64)


def find_hbonds(a: AtomSites, t: ChainTopology, cutoff: float = HBOND_CUTOFF,
                min_angle: float = HBOND_MIN_ANGLE) -> HBondSet:
    """Backbone H-bonds: O(j)...N(i) within ``cutoff`` and N-H...O angle >= ``min_angle``."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if len(a) != len(t.atoms):
        raise ShapeMismatch("atom sites and topology differ in length")
    x = a.positions
    found = []
    o_idx, n_idx = hbond_candidates(t)
    for o, nn in zip(o_idx, n_idx):
        d = float(np.linalg.norm(x[o] - x[nn]))
        if d > cutoff:
            continue
        h = nn + 1
        u = x[nn] - x[h]
        v = x[o] - x[h]
        cosang = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
        angle = float(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
        if angle >= min_angle:
            found.append(HBond(int(nn) // ATOMS_PER_RESIDUE, int(o) // ATOMS_PER_RESIDUE, d, angle))
    found.sort(key=lambda b: (b.acceptor, b.donor))
    return HBondSet(tuple(found))


@dataclass(frozen=True)
class Measurement:
    feature: str
    values: tuple[float, ...]
    inches_per_angstrom: float = INCHES_PER_ANGSTROM

    @property
    def n(self):
        return len(self.values)

    @property
    def mean(self):
        return float(np.mean(self.values)) if self.values else float("nan")

    @property
    def sd(self):
        return float(np.std(self.values, ddof=1)) if len(self.values) > 1 else 0.0

    @property
    def value_angstrom(self):
        return self.mean

    @property
    def value_inch(self):
        return self.mean * self.inches_per_angstrom

    def as_row(self):
        return {
            "feature": self.feature,
            "value_angstrom": self.value_angstrom,
            "value_inch": self.value_inch,
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
        }

    def to_dict(self):
        return {"feature": self.feature, "values": list(self.values), "inches_per_angstrom": self.inches_per_angstrom}

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], tuple(float(v) for v in d["values"]), float(d["inches_per_angstrom"]))

    def __str__(self):
        text = f"{self.feature}: {self.value_angstrom:.3f} A = {self.value_inch:.3f} in"
        if self.n > 1:
            text += f" (n={self.n}, sd={self.sd:.3f} A)"
        return text


MEASUREMENT_COLUMNS = ("feature", "value_angstrom", "value_inch", "n", "mean", "sd")


def measurements_csv(records):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=MEASUREMENT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for m in records:
        writer.writerow(m.as_row())
    return buf.getvalue()


_PAIR = re.compile(r"^(atom|ca|n):(\d+)-(\d+)$")


def measure(a: AtomSites, t: ChainTopology, feature: str, scale: PhysicalScale | None = None) -> Measurement:
    """Ruler measurement on the model.

    ``feature`` is one of (indices 1-based):

    * ``atom:I-J``  distance between atoms I and J
    * ``ca:I-J``    CA of residue I to CA of residue J
    * ``n:I-J``     N of residue I to N of residue J
    * ``helix-span``  CA(1) to CA(n)
    * ``hbonds``    O-N distance of every backbone H-bond
    """
    scale = scale or PhysicalScale()
    x = a.positions
    ipa = scale.inches_per_angstrom
    feature = feature.strip().lower()
    if feature == "helix-span":
        i, j = t.atom_index(0, "CA"), t.atom_index(t.n_residues - 1, "CA")
        return Measurement(feature, (float(np.linalg.norm(x[i] - x[j])),), ipa)
    if feature == "hbonds":
        hb = find_hbonds(a, t)
        return Measurement(feature, tuple(b.distance for b in hb.bonds), ipa)
    m = _PAIR.match(feature)
    if not m:
        raise BadFeature(f"unrecognized feature {feature!r}")
    kind, p, q = m.group(1), int(m.group(2)) - 1, int(m.group(3)) - 1
    if kind == "atom":
        if not (0 <= p < len(x) and 0 <= q < len(x)):
            raise BadFeature(f"atom index out of range in {feature!r}")
        i, j = p, q
    else:
        if not (0 <= p < t.n_residues and 0 <= q < t.n_residues):
            raise BadFeature(f"residue index out of range in {feature!r}")
        name = kind.upper()
        i, j = t.atom_index(p, name), t.atom_index(q, name)
    return Measurement(feature, (float(np.linalg.norm(x[i] - x[j])),), ipa)
