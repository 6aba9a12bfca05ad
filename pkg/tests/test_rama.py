import numpy as np
import pytest

from peppy.chainmodel import Conformation, canonical_conformation
from peppy.errors import BadBinning, BadFormat
from peppy.geometry import PhysicalScale
from peppy.rama import (
    FEASIBILITY,
    HISTOGRAM,
    RamaMap,
    compare,
    export_map,
    feasibility_map,
    histogram,
    import_map_csv,
    region_fraction,
)


@pytest.fixture(scope="module")
def feas():
    return feasibility_map()


@pytest.mark.parametrize("bw", [0, -10, 7, float("nan"), "x"])
def test_bad_bins(bw):
    with pytest.raises(BadBinning):
        histogram([], bw)


def test_grid_shape_must_match():
    with pytest.raises(BadBinning):
        RamaMap(10, np.zeros((35, 36)))


def test_cells_are_half_open():
    m = RamaMap(10, np.zeros((36, 36)))
    assert m.cell(-180, -180) == (0, 0)
    assert m.cell(180, 180) == (0, 0)  # 180 wraps to -180
    assert m.cell(-170, -170.0000001) == (1, 0)
    assert m.cell(179.999, 0) == (35, 18)
    assert m.centers()[0] == -175.0 and m.centers()[-1] == 175.0


def test_histogram_counts_only_full_pairs():
    c = Conformation.from_pairs([(None, 10.0), (-57.0, -47.0), (-57.0, -47.0), (5.0, None)])
    h = histogram([c, c])
    assert h.total() == 4
    assert h[-57, -47] == 4
    assert h.mode == HISTOGRAM and h.values.dtype == np.int64


def test_histogram_values_read_only():
    h = histogram([canonical_conformation("alpha_helix", 5)])
    with pytest.raises(ValueError):
        h.values[0, 0] = 1


def test_canonical_regions_feasible(feas):
    assert feas.mode == FEASIBILITY
    assert feas[-57, -47]
    assert feas[-139, 135]
    assert feas[-119, 113]
    assert not feas[0, 0]


def test_feasible_region_shrinks_with_radius():
    counts = [int(feasibility_map(s=PhysicalScale(radius_factor=f)).values.sum()) for f in (0.6, 0.7, 0.8)]
    assert counts[0] > counts[1] > counts[2] > 0


def test_map_is_not_trivial(feas):
    assert 0 < feas.values.sum() < feas.values.size


def test_region_fraction():
    h = histogram([canonical_conformation("alpha_helix", 5), canonical_conformation("antiparallel_beta", 4)])
    assert region_fraction(h, (-90, -30), (-70, -20)) == pytest.approx(3 / 5)
    assert region_fraction(histogram([]), (-90, -30), (-70, -20)) == 0.0


def test_compare(feas):
    inside = canonical_conformation("alpha_helix", 6)
    outside = Conformation.from_pairs([(0.0, 0.0)] * 4)
    cmp = compare(histogram([inside, outside]), feas)
    assert cmp.score == pytest.approx(4 / 6)
    assert len(cmp.discrepancies) == 1
    d = cmp.discrepancies[0]
    assert (d.phi_center, d.psi_center, d.count) == (5.0, 5.0, 2)


def test_compare_empty_and_mismatch(feas):
    assert compare(histogram([]), feas).score == 0.0
    with pytest.raises(BadBinning):
        compare(histogram([], 20), feas)


def test_discrepancies_sorted():
    ok = RamaMap(10, np.zeros((36, 36), bool), FEASIBILITY)
    h = histogram([Conformation.from_pairs([(None, 0), (30, 30), (60, 60), (60, 60), (90, 90), (60, 60), (1, None)])])
    counts = [(d.phi_center, d.count) for d in compare(h, ok).discrepancies]
    assert counts == [(65.0, 3), (35.0, 1), (95.0, 1)]


def test_csv_round_trip(feas):
    h = histogram([canonical_conformation("antiparallel_beta", 9), canonical_conformation("alpha_helix", 4)], 20)
    back = import_map_csv(export_map(h, "csv"))
    assert back == h
    f2 = import_map_csv(export_map(feas, "csv"), FEASIBILITY)
    assert f2 == feas
    lines = export_map(h, "csv").decode().splitlines()
    assert lines[0] == "phi_center,psi_center,value"
    assert len(lines) == 1 + 18 * 18


def test_csv_errors():
    with pytest.raises(BadFormat):
        import_map_csv("a,b,c\n")
    with pytest.raises(BadBinning):
        import_map_csv("phi_center,psi_center,value\n1,2,3\n1,2,3\n")


def test_pgm_layout():
    v = np.zeros((36, 36), dtype=np.int64)
    v[0, 35] = 4  # phi lowest, psi highest -> top-left pixel
    v[35, 0] = 2  # phi highest, psi lowest -> bottom-right pixel
    data = export_map(RamaMap(10, v), "pgm")
    header = b"P5\n36 36\n255\n"
    assert data.startswith(header)
    img = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(36, 36)
    assert img[0, 0] == 255 and img[35, 35] == 128
    assert img.sum() == 255 + 128


def test_unknown_format(feas):
    with pytest.raises(BadFormat):
        export_map(feas, "png")
