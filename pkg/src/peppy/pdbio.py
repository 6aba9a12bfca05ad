"""PDB ingestion: fixed-column ATOM parsing, backbone traces and dihedrals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .chainmodel import Conformation, wrap_angle
from .errors import (
    ChainTooShort,
    DegenerateDihedral,
    EmptyStructure,
    MalformedRecord,
    UnknownChain,
)

BACKBONE = ("N", "CA", "C", "O")
PEPTIDE_BOND_MAX = 2.0

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AtomRecord:
    serial: int
    atom_name: str
    residue_name: str
    chain_id: str
    residue_seq_number: int
    x: float
    y: float
    z: float
    element: str
    alt_loc: str = ""
    insertion_code: str = ""
    occupancy: float = 1.0

    @property
    def xyz(self):
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class RawStructure:
    records: tuple[AtomRecord, ...]
    source_id: str = ""

    def __len__(self):
        return len(self.records)

    def chains(self):
        return list(dict.fromkeys(r.chain_id for r in self.records))


@dataclass(frozen=True, eq=False)
class BackboneResidue:
    residue_name: str
    residue_seq_number: int
    insertion_code: str
    n: np.ndarray
    ca: np.ndarray
    c: np.ndarray
    o: np.ndarray


@dataclass(frozen=True, eq=False)
class BackboneTrace:
    chain_id: str
    residues: tuple[BackboneResidue, ...]

    def __len__(self):
        return len(self.residues)

    @property
    def residue_names(self):
        return [r.residue_name for r in self.residues]


def _float(field, line_number, what):
    try:
        value = float(field)
    except ValueError:
        raise MalformedRecord(line_number, f"bad {what} field {field.strip()!r}") from None
    if not math.isfinite(value):
        raise MalformedRecord(line_number, f"non-finite {what}")
    return value


def parse_pdb(text, source_id: str = "") -> RawStructure:
    """Decode ATOM records by PDB v3.3 column positions.

    HETATM and every other record type is skipped; only the first MODEL is
    read.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8", errors="replace")
    elif hasattr(text, "read"):
        text = text.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8", errors="replace")
    records = []
    models_seen = 0
    for line_number, line in enumerate(text.splitlines(), start=1):
        tag = line[:6]
        if tag == "MODEL ":
            models_seen += 1
            if models_seen > 1:
                break
            continue
        if tag == "ENDMDL" and models_seen:
            break
        if tag != "ATOM  ":
            continue
        line = line.ljust(80)
        try:
            serial = int(line[6:11])
            seq = int(line[22:26])
        except ValueError:
            raise MalformedRecord(line_number, "bad serial or residue number") from None
        x = _float(line[30:38], line_number, "x")
        y = _float(line[38:46], line_number, "y")
        z = _float(line[46:54], line_number, "z")
        occ_field = line[54:60].strip()
        occupancy = _float(occ_field, line_number, "occupancy") if occ_field else 1.0
        name = line[12:16].strip()
        element = line[76:78].strip() or name.lstrip("0123456789")[:1]
        records.append(
            AtomRecord(
                serial=serial,
                atom_name=name,
                residue_name=line[17:20].strip(),
                chain_id=line[21],
                residue_seq_number=seq,
                x=x,
                y=y,
                z=z,
                element=element.upper(),
                alt_loc=line[16].strip(),
                insertion_code=line[26].strip(),
                occupancy=occupancy,
            )
        )
    if not records:
        raise EmptyStructure("no ATOM records")
    return RawStructure(tuple(records), source_id)


def extract_backbone(s: RawStructure, chain: str) -> BackboneTrace:
    """The longest continuous backbone trace of ``chain``.

    Residues lacking any of N, CA, C, O are dropped and break the chain, as
    does any C(i)-N(i+1) gap of 2 A or more.  Use :func:`extract_traces` to get
    every fragment.
    """
    traces = extract_traces(s, chain)
    if len(traces) > 1:
        log.warning(
            "chain %s splits into %d traces (lengths %s); using the longest",
            chain, len(traces), [len(t) for t in traces],
        )
    return max(traces, key=len)


def extract_traces(s: RawStructure, chain: str) -> list[BackboneTrace]:
    records = [r for r in s.records if r.chain_id == chain]
    if not records:
        raise UnknownChain(chain)

    # group by (seq, icode) in first-seen order; altlocs keep the best occupancy
    residues: dict[tuple[int, str], dict] = {}
    for rec in records:
        key = (rec.residue_seq_number, rec.insertion_code)
        slot = residues.setdefault(key, {"name": rec.residue_name, "atoms": {}})
        if rec.atom_name not in BACKBONE:
            continue
        best = slot["atoms"].get(rec.atom_name)
        if best is None or rec.occupancy > best.occupancy:
            slot["atoms"][rec.atom_name] = rec

    ordered = sorted(residues.items(), key=lambda kv: kv[0])
    traces, current = [], []
    prev = None
    for (seq, icode), slot in ordered:
        atoms = slot["atoms"]
        if not all(name in atoms for name in BACKBONE):
            if current:
                traces.append(current)
            current, prev = [], None
            continue
        res = BackboneResidue(
            slot["name"], seq, icode, *(atoms[name].xyz for name in BACKBONE)
        )
        if prev is not None and np.linalg.norm(res.n - prev.c) >= PEPTIDE_BOND_MAX:
            traces.append(current)
            current = []
        current.append(res)
        prev = res
    if current:
        traces.append(current)
    if not traces:
        raise EmptyStructure(f"chain {chain!r} has no complete backbone residue")
    return [BackboneTrace(chain, tuple(t)) for t in traces]


def compute_dihedral(p1, p2, p3, p4) -> float:
    """Signed torsion angle in degrees, IUPAC convention, in [-180, 180)."""
    p1, p2, p3, p4 = (np.asarray(p, dtype=float) for p in (p1, p2, p3, p4))
    b0 = p1 - p2
    b1 = p3 - p2
    b2 = p4 - p3
    len1 = np.linalg.norm(b1)
    if len1 == 0.0:
        raise DegenerateDihedral("central bond has zero length")
    b1n = b1 / len1
    v = b0 - np.dot(b0, b1n) * b1n
    w = b2 - np.dot(b2, b1n) * b1n
    tol = 1e-10
    if np.linalg.norm(v) <= tol * max(1.0, np.linalg.norm(b0)) or np.linalg.norm(w) <= tol * max(1.0, np.linalg.norm(b2)):
        raise DegenerateDihedral("collinear points")
    x = np.dot(v, w)
    y = np.dot(np.cross(b1n, v), w)
    return wrap_angle(math.degrees(math.atan2(y, x)))


def conformation_from_trace(t: BackboneTrace) -> Conformation:
    n = len(t)
    if n < 2:
        raise ChainTooShort(f"need at least 2 residues, got {n}")
    r = t.residues
    phi = [None] + [compute_dihedral(r[i - 1].c, r[i].n, r[i].ca, r[i].c) for i in range(1, n)]
    psi = [compute_dihedral(r[i].n, r[i].ca, r[i].c, r[i + 1].n) for i in range(n - 1)] + [None]
    return Conformation(tuple(phi), tuple(psi))


def trace_from_sites(positions, residue_names, chain_id="A"):
    """Trace view of forward-kinematics output (7 atoms per residue)."""
    pos = np.asarray(positions)
    residues = []
    for i, name in enumerate(residue_names):
        b = 7 * i
        residues.append(BackboneResidue(name, i + 1, "", pos[b], pos[b + 2], pos[b + 4], pos[b + 5]))
    return BackboneTrace(chain_id, tuple(residues))
