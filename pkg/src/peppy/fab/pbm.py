"""PBM: one JSON document holding structure, scale, energy and magnet data.

Top-level keys, in write order: ``format_version``, ``provenance``,
``sequence``, ``conformation``, ``scale``, ``energy_params``, ``magnets``,
``measurements``.  Any other top-level key is kept verbatim and written back
after the fixed ones, so newer producers can extend a file without older
readers losing data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..chainmodel import Conformation
from ..errors import MalformedPBM, UnsupportedVersion
from ..fold import EnergyParams
from ..geometry import Measurement, PhysicalScale
from .magnets import MagnetSpec

FORMAT_VERSION = "1"
FIXED_KEYS = (
    "format_version", "provenance", "sequence", "conformation",
    "scale", "energy_params", "magnets", "measurements",
)


@dataclass(frozen=True)
class BioModel:
    sequence: str
    conformation: Conformation
    scale: PhysicalScale = field(default_factory=PhysicalScale)
    energy_params: EnergyParams = field(default_factory=EnergyParams)
    magnets: tuple[MagnetSpec, ...] = ()
    measurements: tuple[Measurement, ...] = ()
    provenance: Mapping[str, Any] = field(default_factory=dict)
    extra: Mapping[str, Any] = field(default_factory=dict)
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        if len(self.conformation) != len(self.sequence):
            raise ValueError(
                f"sequence has {len(self.sequence)} residues, conformation {len(self.conformation)}"
            )
        object.__setattr__(self, "magnets", tuple(self.magnets))
        object.__setattr__(self, "measurements", tuple(self.measurements))
        clash = set(self.extra) & set(FIXED_KEYS)
        if clash:
            raise ValueError(f"extra keys shadow fixed keys: {sorted(clash)}")

    __hash__ = None  # holds dicts


def _document(b: BioModel):
    doc = {
        "format_version": b.format_version,
        "provenance": dict(b.provenance),
        "sequence": b.sequence,
        "conformation": {"phi": list(b.conformation.phi), "psi": list(b.conformation.psi)},
        "scale": {
            "inches_per_angstrom": b.scale.inches_per_angstrom,
            "radius_factor": b.scale.radius_factor,
            "vdw_radii": dict(b.scale.vdw_radii),
        },
        "energy_params": b.energy_params.to_dict(),
        "magnets": [m.to_dict() for m in b.magnets],
        "measurements": [m.to_dict() for m in b.measurements],
    }
    for key in sorted(b.extra):
        doc[key] = b.extra[key]
    return doc


def write_pbm(b: BioModel) -> bytes:
    """Serialize to UTF-8 JSON; floats use shortest round-trip repr."""
    return (json.dumps(_document(b), indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")


def read_pbm(data) -> BioModel:
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedPBM(exc.start, "not UTF-8") from None
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedPBM(exc.pos, exc.msg) from None
    if not isinstance(doc, dict):
        raise MalformedPBM(0, "top level must be an object")
    if "format_version" not in doc:
        raise MalformedPBM(0, "missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise UnsupportedVersion(doc["format_version"])
    missing = [k for k in FIXED_KEYS if k not in doc]
    if missing:
        raise MalformedPBM(0, f"missing keys {missing}")
    try:
        conf = doc["conformation"]
        scale = doc["scale"]
        return BioModel(
            sequence=doc["sequence"],
            conformation=Conformation(tuple(conf["phi"]), tuple(conf["psi"])),
            scale=PhysicalScale(scale["inches_per_angstrom"], scale["radius_factor"], dict(scale["vdw_radii"])),
            energy_params=EnergyParams.from_dict(doc["energy_params"]),
            magnets=tuple(MagnetSpec.from_dict(m) for m in doc["magnets"]),
            measurements=tuple(Measurement.from_dict(m) for m in doc["measurements"]),
            provenance=doc["provenance"],
            extra={k: v for k, v in doc.items() if k not in FIXED_KEYS},
            format_version=doc["format_version"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedPBM(0, f"invalid content: {exc}") from None
