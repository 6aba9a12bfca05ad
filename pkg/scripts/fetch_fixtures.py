"""Download the crystal structures used by the optional fixture checks.

    python scripts/fetch_fixtures.py [--dest tests/fixtures] [--force]

Files come from the RCSB PDB archive.  Nothing in the package touches the
network; this script is the only downloader and must be run by hand.
"""

import argparse
import hashlib
import sys
import urllib.request
from pathlib import Path

RCSB = "https://files.rcsb.org/download/{}.pdb"
FIXTURES = {
    "2ZTA": "GCN4 leucine zipper, parallel coiled-coil dimer (helix span and H-bond checks)",
    "1FSD": "designed 28-residue beta-beta-alpha motif",
}


def fetch(code, dest: Path, force=False):
    path = dest / f"{code}.pdb"
    if path.exists() and not force:
        return path, "kept"
    with urllib.request.urlopen(RCSB.format(code), timeout=30) as resp:
        data = resp.read()
    if not data.lstrip().startswith((b"HEADER", b"REMARK", b"ATOM", b"CRYST1")):
        raise ValueError(f"{code}: response does not look like a PDB file")
    path.write_bytes(data)
    return path, "downloaded"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dest", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    ap.add_argument("--force", action="store_true", help="re-download existing files")
    args = ap.parse_args(argv)
    args.dest.mkdir(parents=True, exist_ok=True)
    status = 0
    for code, what in FIXTURES.items():
        try:
            path, how = fetch(code, args.dest, args.force)
        except OSError as exc:
            print(f"{code}: download failed ({exc})", file=sys.stderr)
            status = 1
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
        print(f"{code}: {how} {path} sha256:{digest}... ({what})")
    return status


if __name__ == "__main__":
    sys.exit(main())
