"""Pure-Python/NumPy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them one for one.
Both backends must agree to floating-point round-off, which the test suite
checks on every run.
"""

import math

import numpy as np

# Layout of the ``geom`` vector shared with the compiled kernel.
GEOM_FIELDS = (
    "n_ca", "ca_c", "c_n", "c_o", "n_h", "ca_ha",
    "n_ca_c", "ca_c_n", "c_n_ca", "ca_c_o", "ca_n_h",
    "c_ca_sc", "n_c_ca_sc", "c_ca_ha", "n_c_ca_ha", "omega",
)

_DEG = math.pi / 180.0


def _place(a, b, c, length, angle, torsion):
    # NeRF: put d so that |cd| = length, angle(b, c, d) = angle, dihedral(a, b, c, d) = torsion
    bcx, bcy, bcz = c[0] - b[0], c[1] - b[1], c[2] - b[2]
    inv = 1.0 / math.sqrt(bcx * bcx + bcy * bcy + bcz * bcz)
    bcx, bcy, bcz = bcx * inv, bcy * inv, bcz * inv
    abx, aby, abz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    nx = aby * bcz - abz * bcy
    ny = abz * bcx - abx * bcz
    nz = abx * bcy - aby * bcx
    inv = 1.0 / math.sqrt(nx * nx + ny * ny + nz * nz)
    nx, ny, nz = nx * inv, ny * inv, nz * inv
    mx = ny * bcz - nz * bcy
    my = nz * bcx - nx * bcz
    mz = nx * bcy - ny * bcx
    sa = math.sin(angle * _DEG)
    d0 = -length * math.cos(angle * _DEG)
    d1 = length * sa * math.cos(torsion * _DEG)
    d2 = length * sa * math.sin(torsion * _DEG)
    return (
        c[0] + bcx * d0 + mx * d1 + nx * d2,
        c[1] + bcy * d0 + my * d1 + ny * d2,
        c[2] + bcz * d0 + mz * d1 + nz * d2,
    )


def build_chain(phi, psi, geom, sc_len):
    """Cartesian coordinates (7n x 3) from per-residue phi/psi.

    ``phi[0]`` and ``psi[n-1]`` carry the virtual terminal angles.
    Atom order per residue is N, H, CA, HA, C, O, SC.
    """
    (n_ca, ca_c, c_n, c_o, n_h, ca_ha, n_ca_c, ca_c_n, c_n_ca, ca_c_o,
     ca_n_h, c_ca_sc, n_c_ca_sc, c_ca_ha, n_c_ca_ha, omega) = (float(x) for x in geom)
    n = len(phi)
    out = np.empty((7 * n, 3))
    N = (0.0, 0.0, 0.0)
    CA = (n_ca, 0.0, 0.0)
    t = (180.0 - n_ca_c) * _DEG
    C = (n_ca + ca_c * math.cos(t), ca_c * math.sin(t), 0.0)
    for i in range(n):
        if i > 0:
            N_new = _place(N, CA, C, c_n, ca_c_n, psi[i - 1])
            CA_new = _place(CA, C, N_new, n_ca, c_n_ca, omega)
            C_new = _place(C, N_new, CA_new, ca_c, n_ca_c, phi[i])
            N, CA, C = N_new, CA_new, C_new
        b = 7 * i
        out[b + 0] = N
        out[b + 1] = _place(C, CA, N, n_h, ca_n_h, phi[i] + 180.0)
        out[b + 2] = CA
        out[b + 3] = _place(N, C, CA, ca_ha, c_ca_ha, n_c_ca_ha)
        out[b + 4] = C
        out[b + 5] = _place(N, CA, C, c_o, ca_c_o, psi[i] + 180.0)
        out[b + 6] = _place(N, C, CA, sc_len[i], c_ca_sc, n_c_ca_sc)
    return out


def clash_pairs(pos, radii, excluded, factor):
    """All non-excluded pairs (i < j) closer than ``factor * (r_i + r_j)``.

    Returns ``(i, j, distance)`` arrays sorted by (i, j).
    """
    pos = np.asarray(pos, dtype=float)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    limit = factor * (radii[:, None] + radii[None, :])
    hit = (dist < limit) & ~np.asarray(excluded, dtype=bool)
    hit = np.triu(hit, k=1)
    i, j = np.nonzero(hit)
    return i.astype(np.int64), j.astype(np.int64), dist[i, j]


def _smootherstep(x):
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def _smootherstep_deriv(x):
    return 30.0 * x * x * (x - 1.0) * (x - 1.0)


def pair_terms(pos, radii, excluded, factor, k_clash, hb_o, hb_n, k_hbond, hb_range, hb_width):
    """Clash penalty and H-bond attraction, with the Cartesian gradient.

    Clash: ``k_clash * overlap**2`` for every non-excluded overlapping pair.
    H-bond: ``-k_hbond * s(d)`` for each candidate O/N pair, where ``s`` is 1
    below ``hb_range - hb_width``, 0 beyond ``hb_range`` and a C2 ramp between.
    """
    pos = np.asarray(pos, dtype=float)
    grad = np.zeros_like(pos)

    i, j, d = clash_pairs(pos, radii, excluded, factor)
    e_clash = 0.0
    if len(i):
        overlap = factor * (radii[i] + radii[j]) - d
        e_clash = float(k_clash * np.sum(overlap * overlap))
        # dE/dd = -2 k overlap; dd/dx_i = (x_i - x_j) / d
        safe = np.where(d > 0.0, d, np.inf)  # coincident atoms: no defined direction
        coef = (-2.0 * k_clash * overlap / safe)[:, None] * (pos[i] - pos[j])
        np.add.at(grad, i, coef)
        np.add.at(grad, j, -coef)

    e_hb = 0.0
    if len(hb_o) and k_hbond != 0.0:
        vec = pos[hb_o] - pos[hb_n]
        dist = np.sqrt(np.einsum("ij,ij->i", vec, vec))
        lo = hb_range - hb_width
        x = np.clip((hb_range - dist) / hb_width, 0.0, 1.0)
        e_hb = float(-k_hbond * np.sum(_smootherstep(x)))
        ramp = (dist > lo) & (dist < hb_range)
        if np.any(ramp):
            # dE/dd = -k * s'(x) * dx/dd = k * s'(x) / width
            dedd = k_hbond * _smootherstep_deriv(x[ramp]) / hb_width
            coef = (dedd / dist[ramp])[:, None] * vec[ramp]
            np.add.at(grad, hb_o[ramp], coef)
            np.add.at(grad, hb_n[ramp], -coef)
    return e_clash, e_hb, grad
