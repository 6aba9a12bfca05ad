"""Magnet layout for the printed model.

Each rotatable bond carries a ring of detent magnets; each residue carries a
donor magnet at its N-H tip and an acceptor magnet at its O tip.  Positions
are in inches, in a frame local to the rigid unit that owns the magnet:

* detent: origin at the rotating bond's second atom, +z along the bond,
  +x towards the first dihedral atom projected off the axis;
* donor: origin at N, +x along N->H, +y towards CA in the peptide plane;
* acceptor: origin at C, +x along C->O, +y towards CA in the peptide plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..chainmodel import BackboneGeometry, ChainTopology, default_config
from ..geometry import PhysicalScale

DETENT = "detent"
DONOR = "hbond_donor"
ACCEPTOR = "hbond_acceptor"
ROLES = (DETENT, DONOR, ACCEPTOR)
N_OUT = "N_out"
S_OUT = "S_out"
RING_RADIUS_RATIO = 0.4
DETENT_STRENGTH_CLASS = 2
HBOND_STRENGTH_CLASS = 1


@dataclass(frozen=True)
class MagnetSpec:
    role: str
    anchor: int  # dihedral index for detents, atom index otherwise
    position: tuple[float, float, float]
    polarity: str
    strength_class: int
    detent_angles_deg: tuple[float, ...] = ()
    ring_positions: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown magnet role {self.role!r}")
        if self.polarity not in (N_OUT, S_OUT):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if not (isinstance(self.strength_class, int) and self.strength_class > 0):
            raise ValueError("strength_class must be a positive integer")
        coords = list(self.position) + [v for p in self.ring_positions for v in p]
        if len(self.position) != 3 or not all(math.isfinite(v) for v in coords):
            raise ValueError("magnet positions must be finite 3-vectors")

    def to_dict(self):
        return {
            "role": self.role,
            "anchor": self.anchor,
            "position": list(self.position),
            "polarity": self.polarity,
            "strength_class": self.strength_class,
            "detent_angles_deg": list(self.detent_angles_deg),
            "ring_positions": [list(p) for p in self.ring_positions],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            role=d["role"],
            anchor=int(d["anchor"]),
            position=tuple(float(v) for v in d["position"]),
            polarity=d["polarity"],
            strength_class=int(d["strength_class"]),
            detent_angles_deg=tuple(float(v) for v in d.get("detent_angles_deg", ())),
            ring_positions=tuple(tuple(float(v) for v in p) for p in d.get("ring_positions", ())),
        )


def magnet_layout(t: ChainTopology, detents=None, s: PhysicalScale | None = None,
                  g: BackboneGeometry | None = None) -> list[MagnetSpec]:
    """Detent specs in dihedral order, then donors, then acceptors, by residue."""
    s = s or PhysicalScale()
    g = g or default_config().backbone
    if detents is None:
        detents = default_config().conformations.detents()
    detents = [tuple(float(v) for v in d) for d in detents]
    radii = s.atom_radii(t)
    sphere = radii * s.radius_factor * s.inches_per_angstrom

    specs = []
    for k, dih in enumerate(t.rotatable_dihedrals):
        col = 0 if dih.kind == "phi" else 1
        angles = tuple(d[col] for d in detents)
        r = RING_RADIUS_RATIO * sphere[dih.atoms[2]]
        ring = tuple(
            (r * math.cos(math.radians(a)), r * math.sin(math.radians(a)), 0.0) for a in angles
        )
        specs.append(
            MagnetSpec(DETENT, k, ring[0] if ring else (0.0, 0.0, 0.0), N_OUT,
                       DETENT_STRENGTH_CLASS, angles, ring)
        )
    for i in range(t.n_residues):
        h = t.atom_index(i, "H")
        tip = s.to_physical(g.n_h) + sphere[h]
        specs.append(MagnetSpec(DONOR, h, (tip, 0.0, 0.0), N_OUT, HBOND_STRENGTH_CLASS))
    for i in range(t.n_residues):
        o = t.atom_index(i, "O")
        tip = s.to_physical(g.c_o) + sphere[o]
        specs.append(MagnetSpec(ACCEPTOR, o, (tip, 0.0, 0.0), S_OUT, HBOND_STRENGTH_CLASS))
    return specs
