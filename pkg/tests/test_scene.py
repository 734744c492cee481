import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tdainsar.errors import FormatError
from tdainsar.scene import (Block, HeightField, blocks_scene, canopy_scene, default_blocks, max_height_difference,
                            ramp_scene, read_dem_csv, write_dem_csv)


def test_height_field_validation():
    with pytest.raises(ValueError):
        HeightField(np.zeros((1, 5)))
    with pytest.raises(ValueError):
        HeightField(np.array([[0.0, np.nan], [0, 0]]), np.ones((2, 2), bool))
    f = HeightField(np.array([[0.0, np.nan], [1, 2]]))
    assert not f.mask[0, 1] and f.mask.sum() == 3
    with pytest.raises(ValueError):
        f.heights[0, 0] = 1.0


def test_ramp_scene():
    assert np.all(ramp_scene(4, 5, 0).heights == 0)
    r = ramp_scene(2, 2, 100)
    assert set(r.heights[0]) == {0.0, 100.0}
    assert np.all(r.heights[:, 0] == 0) and np.all(r.heights[:, -1] == 100)
    assert r.heights.max() == 100 and r.mask.all()
    with pytest.raises(ValueError):
        ramp_scene(3, 3, -1)


def test_blocks_scene():
    flat = ramp_scene(10, 10, 0)
    assert np.array_equal(blocks_scene(flat, []).heights, flat.heights)
    one = blocks_scene(flat, [Block(2, 3, 4, 2, 30.0)])
    inside = np.zeros((10, 10), bool)
    inside[2:6, 3:5] = True
    assert np.all(one.heights[inside] == 30) and np.all(one.heights[~inside] == 0)
    two = blocks_scene(flat, [{"row0": 0, "col0": 0, "rows": 3, "cols": 3, "height": 5},
                              {"row0": 2, "col0": 2, "rows": 2, "cols": 2, "height": 7}])
    assert two.heights[2, 2] == 12
    with pytest.raises(ValueError):
        blocks_scene(flat, [Block(8, 8, 4, 4, 1.0)])


@given(st.integers(4, 40), st.integers(4, 40), st.integers(0, 15))
@settings(max_examples=50)
def test_blocks_preserve_exterior(rows, cols, count):
    base = ramp_scene(rows, cols, 50)
    blocks = default_blocks(rows, cols, count)
    out = blocks_scene(base, blocks)
    touched = np.zeros((rows, cols), bool)
    for b in blocks:
        touched[b.row0:b.row0 + b.rows, b.col0:b.col0 + b.cols] = True
    assert np.array_equal(out.heights[~touched], base.heights[~touched])


def test_canopy_scene():
    c = canopy_scene(50, 60, 30.0, 0.0, 0.4, seed=1)
    assert np.all(c.heights[c.mask] == 30.0)
    assert abs(c.mask.mean() - 0.4) < 0.05
    assert canopy_scene(20, 20, 30.0, 5.0, 1.0, seed=1).mask.all()
    big = canopy_scene(200, 200, 30.0, 5.0, 1.0, seed=2)
    n = big.mask.sum()
    assert abs(big.heights[big.mask].mean() - 30.0) < 3 * 5.0 / np.sqrt(n)
    again = canopy_scene(200, 200, 30.0, 5.0, 1.0, seed=2)
    assert np.array_equal(big.heights, again.heights, equal_nan=True)
    for bad in (0.0, 1.5):
        with pytest.raises(ValueError):
            canopy_scene(5, 5, 30, 5, bad, 0)


def test_max_height_difference():
    assert max_height_difference(ramp_scene(5, 5, 0)) == 0
    assert max_height_difference(ramp_scene(5, 5, 100)) == 100
    field = blocks_scene(ramp_scene(20, 20, 100), [Block(5, 19, 2, 1, 40.0)])
    h = field.heights
    assert max_height_difference(field) == pytest.approx(h.max() - h.min()) == pytest.approx(140.0)
    empty = HeightField(np.full((3, 3), np.nan))
    with pytest.raises(ValueError):
        max_height_difference(empty)


def test_dem_csv_round_trip(tmp_path):
    field = canopy_scene(12, 9, 30.0, 5.0, 0.5, seed=4)
    write_dem_csv(tmp_path / "dem.csv", field)
    back = read_dem_csv(tmp_path / "dem.csv")
    assert np.array_equal(back.heights, field.heights, equal_nan=True)
    assert np.array_equal(back.mask, field.mask)


def test_dem_csv_errors_name_file_and_line(tmp_path):
    write_dem_csv(tmp_path / "dem.csv", ramp_scene(4, 4, 10))
    lines = (tmp_path / "dem.csv").read_text().splitlines()
    lines[4] = "1.0,2.0,oops,3.0"
    (tmp_path / "bad.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError, match=r"bad\.csv line 5"):
        read_dem_csv(tmp_path / "bad.csv")
    with pytest.raises(FormatError, match="missing.csv"):
        read_dem_csv(tmp_path / "missing.csv")
