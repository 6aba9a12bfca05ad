"""PDB v3.3 text export of a built chain."""

from __future__ import annotations

from ..chainmodel import ChainTopology, SideChainClass
from ..errors import ShapeMismatch
from ..geometry import AtomSites


def _atom_name(atom, residue):
    if atom.name == "SC":
        return "HA3" if residue.side_chain_class is SideChainClass.HYDROGEN else "CB"
    if atom.name == "HA" and residue.side_chain_class is SideChainClass.HYDROGEN:
        return "HA2"
    return atom.name


def _name_field(name, element):
    # one-letter elements start in column 14, as the format expects
    return f" {name:<3}" if len(element) == 1 and len(name) < 4 else f"{name:<4}"


def write_pdb(a: AtomSites, t: ChainTopology, chain_id: str = "A") -> bytes:
    """ATOM records for every atom, then TER and END.

    The side-chain sphere is written as CB (or HA3 for glycine).
    """
    if len(a) != len(t.atoms):
        raise ShapeMismatch("atom sites and topology differ in length")
    lines = []
    serial = 0
    for serial, (atom, xyz) in enumerate(zip(t.atoms, a.positions), start=1):
        res = t.sequence[atom.residue_index]
        name = _atom_name(atom, res)
        element = atom.element
        x, y, z = (float(v) + 0.0 for v in xyz)
        lines.append(
            f"ATOM  {serial:5d} {_name_field(name, element)} {res.three_letter_code:>3} {chain_id}"
            f"{atom.residue_index + 1:4d}    {x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{0.0:6.2f}"
            f"          {element:>2}  "
        )
    if t.atoms:
        last = t.sequence[-1]
        lines.append(f"TER   {serial + 1:5d}      {last.three_letter_code:>3} {chain_id}{t.n_residues:4d}".ljust(80))
    lines.append("END".ljust(80))
    return ("\n".join(lines) + "\n").encode("ascii")
