"""Residue tables, backbone geometry and the rigid-unit chain topology.

A residue is modeled as seven hard spheres: the amide N and its H, the
alpha carbon with its HA, the carbonyl C and O, and one effective side-chain
sphere (SC) that stands in for the plug-in side-chain unit.  Only phi and psi
rotate; omega is a rigid trans amide plate.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyChain, UnknownConformation, UnknownResidue

ATOM_NAMES = ("N", "H", "CA", "HA", "C", "O", "SC")
ATOMS_PER_RESIDUE = len(ATOM_NAMES)
_N, _H, _CA, _HA, _C, _O, _SC = range(ATOMS_PER_RESIDUE)

CONFIG_ENV = "PEPPY_CONFIG"


class SideChainClass(str, Enum):
    HYDROGEN = "hydrogen"
    METHYL = "methyl"
    GENERIC_PLUG = "generic-plug"


@dataclass(frozen=True)
class ResidueSpec:
    one_letter_code: str
    three_letter_code: str
    side_chain_class: SideChainClass
    side_chain_radius: float
    side_chain_mass: float = 15.0

    @property
    def side_chain_element(self):
        return "H" if self.side_chain_class is SideChainClass.HYDROGEN else "C"


@dataclass(frozen=True)
class BackboneGeometry:
    """Idealized rigid-unit geometry. Lengths in angstrom, angles in degrees."""

    n_ca: float = 1.458
    ca_c: float = 1.525
    c_n: float = 1.329
    c_o: float = 1.231
    n_h: float = 1.010
    ca_ha: float = 1.090
    ca_sc: float = 1.530
    n_ca_c: float = 110.0
    ca_c_n: float = 116.2
    c_n_ca: float = 121.7
    ca_c_o: float = 120.5
    c_n_h: float = 119.5
    c_ca_sc: float = 109.5
    n_c_ca_sc: float = 122.686
    c_ca_ha: float = 109.5
    n_c_ca_ha: float = -117.9
    omega_deg: float = 180.0
    # virtual angles that orient H(1) and O(n), which have no real dihedral
    terminal_phi_deg: float = -139.0
    terminal_psi_deg: float = 135.0

    LENGTHS = ("n_ca", "ca_c", "c_n", "c_o", "n_h", "ca_ha", "ca_sc")
    ANGLES = ("n_ca_c", "ca_c_n", "c_n_ca", "ca_c_o", "c_n_h", "c_ca_sc", "c_ca_ha")

    def __post_init__(self):
        for name in self.LENGTHS:
            value = getattr(self, name)
            if not 0.8 < value < 1.8:
                raise ValueError(f"bond length {name}={value} outside (0.8, 1.8) A")
        for name in self.ANGLES:
            value = getattr(self, name)
            if not 90.0 < value < 180.0:
                raise ValueError(f"bond angle {name}={value} outside (90, 180) deg")
        if self.omega_deg != 180.0:
            raise ValueError("omega is fixed at 180 deg (rigid trans amide plate)")
        if self.c_n_ca + self.c_n_h >= 360.0:
            raise ValueError("C-N-CA and C-N-H angles leave no room for H")

    @property
    def ca_n_h(self):
        # H lies in the amide plane, so the three angles at N sum to 360
        return 360.0 - self.c_n_ca - self.c_n_h

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class Atom:
    residue_index: int
    name: str
    element: str


@dataclass(frozen=True)
class Dihedral:
    kind: str  # "phi" or "psi"
    residue_index: int
    atoms: tuple[int, int, int, int]


@dataclass(frozen=True)
class ChainTopology:
    sequence: tuple[ResidueSpec, ...]
    atoms: tuple[Atom, ...]
    bonds: tuple[tuple[int, int], ...]
    rotatable_dihedrals: tuple[Dihedral, ...]

    @property
    def n_residues(self):
        return len(self.sequence)

    @property
    def sequence_string(self):
        return "".join(r.one_letter_code for r in self.sequence)

    def atom_index(self, residue_index, name):
        """Index of atom ``name`` in residue ``residue_index`` (0-based)."""
        if not 0 <= residue_index < self.n_residues:
            raise IndexError(f"residue {residue_index} out of range")
        return residue_index * ATOMS_PER_RESIDUE + ATOM_NAMES.index(name)

    def elements(self):
        return [a.element for a in self.atoms]

    @cached_property
    def graph_distance(self):
        """Bond-graph distance between every atom pair (-1 when disconnected)."""
        n = len(self.atoms)
        adj = [[] for _ in range(n)]
        for a, b in self.bonds:
            adj[a].append(b)
            adj[b].append(a)
        dist = np.full((n, n), -1, dtype=np.int64)
        for start in range(n):
            row = dist[start]
            row[start] = 0
            frontier = [start]
            while frontier:
                nxt = []
                for u in frontier:
                    for v in adj[u]:
                        if row[v] < 0:
                            row[v] = row[u] + 1
                            nxt.append(v)
                frontier = nxt
        dist.setflags(write=False)
        return dist

    @cached_property
    def exclusion_mask(self):
        """True for pairs within three bonds (1-2, 1-3, 1-4), which never clash."""
        d = self.graph_distance
        mask = (d >= 0) & (d <= 3)
        mask.setflags(write=False)
        return mask

    def to_json(self):
        return json.dumps(
            {
                "sequence": self.sequence_string,
                "atoms": [[a.residue_index, a.name, a.element] for a in self.atoms],
                "bonds": [list(b) for b in self.bonds],
                "dihedrals": [[d.kind, d.residue_index, list(d.atoms)] for d in self.rotatable_dihedrals],
            },
            separators=(",", ":"),
        )


def wrap_angle(deg):
    """Map an angle (scalar or array) into [-180, 180)."""
    wrapped = np.mod(np.asarray(deg, dtype=float) + 180.0, 360.0) - 180.0
    # mod can round up to exactly 180 for tiny negative inputs
    wrapped = np.where(wrapped >= 180.0, wrapped - 360.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Conformation:
    """Per-residue (phi, psi) in degrees; phi[0] and psi[-1] are ``None``."""

    phi: tuple[float | None, ...]
    psi: tuple[float | None, ...]

    def __post_init__(self):
        n = len(self.phi)
        if n == 0 or len(self.psi) != n:
            raise ValueError("phi and psi must be non-empty and of equal length")
        for i in range(n):
            for kind, values, absent in (("phi", self.phi, i == 0), ("psi", self.psi, i == n - 1)):
                value = values[i]
                if absent:
                    if value is not None:
                        raise ValueError(f"{kind}[{i}] must be absent at the terminus")
                elif value is None:
                    raise ValueError(f"{kind}[{i}] missing inside the chain")
                elif not -180.0 <= value < 180.0:
                    raise ValueError(f"{kind}[{i}]={value} outside [-180, 180)")

    def __len__(self):
        return len(self.phi)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float | None, float | None]]):
        """Build from per-residue pairs, wrapping angles and blanking the termini."""
        n = len(pairs)
        phi = tuple(None if i == 0 else wrap_angle(p[0]) for i, p in enumerate(pairs))
        psi = tuple(None if i == n - 1 else wrap_angle(p[1]) for i, p in enumerate(pairs))
        return cls(phi, psi)

    @classmethod
    def from_vector(cls, n, values):
        """Inverse of :meth:`vector`: phi(2..n) followed by psi(1..n-1)."""
        values = wrap_angle(np.asarray(values, dtype=float).reshape(-1))
        if len(values) != 2 * (n - 1):
            raise ValueError(f"expected {2 * (n - 1)} angles, got {len(values)}")
        phi = (None,) + tuple(float(v) for v in values[: n - 1])
        psi = tuple(float(v) for v in values[n - 1 :]) + (None,)
        return cls(phi, psi)

    def vector(self):
        """Present angles in rotatable-dihedral order (all phi, then all psi)."""
        return np.array(self.phi[1:] + self.psi[:-1], dtype=float)

    def pairs(self):
        return list(zip(self.phi, self.psi))


@dataclass(frozen=True)
class ConformationEntry:
    pairs: tuple[tuple[float, float], ...]
    detent: bool = False


@dataclass(frozen=True)
class CanonicalConformations:
    entries: Mapping[str, ConformationEntry]
    flank: str = "antiparallel_beta"

    def __getitem__(self, name):
        try:
            return self.entries[name]
        except KeyError:
            raise UnknownConformation(name) from None

    def names(self):
        return list(self.entries)

    def detents(self):
        """The magnet-biased (phi, psi) pairs, alpha helix first when present."""
        names = [k for k, v in self.entries.items() if v.detent]
        names.sort(key=lambda k: k != "alpha_helix")
        return tuple(self.entries[k].pairs[0] for k in names)


@dataclass(frozen=True)
class Config:
    residues: tuple[ResidueSpec, ...]
    backbone: BackboneGeometry
    conformations: CanonicalConformations
    vdw_radii: Mapping[str, float] = field(default_factory=dict)
    element_masses: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        ones = [r.one_letter_code for r in self.residues]
        threes = [r.three_letter_code for r in self.residues]
        if len(set(ones)) != len(ones) or len(set(threes)) != len(threes):
            raise ValueError("residue codes must be unique")
        for r in self.residues:
            if r.side_chain_radius <= 0:
                raise ValueError(f"side_chain_radius must be positive for {r.three_letter_code}")

    def residue_index(self):
        table = {}
        for r in self.residues:
            table[r.one_letter_code.upper()] = r
            table[r.three_letter_code.upper()] = r
        return table


def _config_from_dict(doc):
    residues = tuple(
        ResidueSpec(
            one_letter_code=r["one"],
            three_letter_code=r["three"],
            side_chain_class=SideChainClass(r["side_chain_class"]),
            side_chain_radius=float(r["side_chain_radius"]),
            side_chain_mass=float(r.get("side_chain_mass", 15.0)),
        )
        for r in doc["residues"]
    )
    backbone = BackboneGeometry(**doc.get("backbone", {}))
    entries = {}
    for name, spec in doc["conformations"].items():
        pairs = tuple((float(p), float(s)) for p, s in spec["pairs"])
        for p, s in pairs:
            if not (-180 <= p < 180 and -180 <= s < 180):
                raise ValueError(f"conformation {name} has angles outside [-180, 180)")
        entries[name] = ConformationEntry(pairs, bool(spec.get("detent", False)))
    conformations = CanonicalConformations(entries, doc.get("flank_conformation", "antiparallel_beta"))
    return Config(
        residues=residues,
        backbone=backbone,
        conformations=conformations,
        vdw_radii={k: float(v) for k, v in doc.get("vdw_radii", {}).items()},
        element_masses={k: float(v) for k, v in doc.get("element_masses", {}).items()},
    )


@lru_cache(maxsize=None)
def default_config():
    text = resources.files("peppy").joinpath("data/defaults.json").read_text(encoding="utf-8")
    return _config_from_dict(json.loads(text))


def load_config(path=None):
    """Load a configuration file, falling back to ``$PEPPY_CONFIG`` then the shipped defaults.

    A file only needs the sections it overrides; missing sections come from
    the defaults.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return default_config()
    base = json.loads(resources.files("peppy").joinpath("data/defaults.json").read_text(encoding="utf-8"))
    override = json.loads(Path(path).read_text(encoding="utf-8"))
    for key, value in override.items():
        if key == "backbone" and isinstance(value, dict):
            base["backbone"].update(value)
        else:
            base[key] = value
    return _config_from_dict(base)


def lookup_residue(code: str, config: Config | None = None) -> ResidueSpec:
    config = config or default_config()
    table = config.residue_index()
    try:
        return table[code.strip().upper()]
    except (KeyError, AttributeError):
        raise UnknownResidue(code) from None


def _tokens(sequence):
    if isinstance(sequence, str):
        text = sequence.strip()
        if any(sep in text for sep in "- ,"):
            return [t for t in text.replace("-", " ").replace(",", " ").split() if t]
        return list(text)
    return list(sequence)


def build_topology(sequence, config: Config | None = None) -> ChainTopology:
    """Decompose a residue sequence into atoms, bonds and rotatable dihedrals.

    ``sequence`` is a one-letter string ("AAK"), a separated three-letter
    string ("ALA-ALA-LYS"), or a list of codes.
    """
    config = config or default_config()
    tokens = _tokens(sequence)
    if not tokens:
        raise EmptyChain("sequence is empty")
    residues = tuple(lookup_residue(t, config) for t in tokens)
    n = len(residues)

    atoms = []
    bonds = []
    for i, res in enumerate(residues):
        base = i * ATOMS_PER_RESIDUE
        for name in ATOM_NAMES:
            element = res.side_chain_element if name == "SC" else name[0]
            atoms.append(Atom(i, name, element))
        bonds += [
            (base + _N, base + _H),
            (base + _N, base + _CA),
            (base + _CA, base + _HA),
            (base + _CA, base + _C),
            (base + _CA, base + _SC),
            (base + _C, base + _O),
        ]
        if i > 0:
            bonds.append((base - ATOMS_PER_RESIDUE + _C, base + _N))

    dihedrals = []
    for i in range(1, n):
        b, p = i * ATOMS_PER_RESIDUE, (i - 1) * ATOMS_PER_RESIDUE
        dihedrals.append(Dihedral("phi", i, (p + _C, b + _N, b + _CA, b + _C)))
    for i in range(n - 1):
        b, nx = i * ATOMS_PER_RESIDUE, (i + 1) * ATOMS_PER_RESIDUE
        dihedrals.append(Dihedral("psi", i, (b + _N, b + _CA, b + _C, nx + _N)))

    return ChainTopology(residues, tuple(atoms), tuple(sorted(bonds)), tuple(dihedrals))


def canonical_conformation(name: str, n: int, config: Config | None = None) -> Conformation:
    """Uniform secondary structure ``name`` over ``n`` residues.

    Single-pair entries fill every residue. Multi-pair entries (turns) sit on
    the central residues with the flank conformation elsewhere.
    """
    config = config or default_config()
    if n < 1:
        raise EmptyChain("conformation needs at least one residue")
    entry = config.conformations[name]
    if len(entry.pairs) == 1:
        pairs = [entry.pairs[0]] * n
    else:
        flank = config.conformations[config.conformations.flank].pairs[0]
        pairs = [flank] * n
        k = len(entry.pairs)
        start = max(0, (n - k) // 2)
        for j, pair in enumerate(entry.pairs):
            if start + j < n:
                pairs[start + j] = pair
    return Conformation.from_pairs(pairs)
