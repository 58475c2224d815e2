"""Tests for the PNG previews"""

import numpy as np
import pytest
from PIL import Image

from phasonsim import Profile
from phasonsim.dynamics import project_initial_data
from phasonsim.grid import Grid
from phasonsim.profiles import ProfileSpec
from phasonsim.render import field_plane, render_field_image


def bump_state(grid: Grid):  # type: ignore[no-untyped-def]
    return project_initial_data(
        grid,
        ProfileSpec(Profile.SINE_BUMP, 0.1, (1.0, 0.0, 0.0)),
        ProfileSpec(),
        ProfileSpec(Profile.SINE_BUMP, -0.2, (0.0, 1.0, 0.0)),
    )


def test_image_size_and_colors(tmp_path):
    grid = Grid.uniform(2, 5)
    path = render_field_image(
        bump_state(grid), "nu", 1, tmp_path / "nu.png", pixels_per_node=4
    )
    with Image.open(path) as img:
        assert img.size == (28, 28)
        assert img.mode == "RGB"
        # boundary is zero, the middle is the most negative value
        assert img.getpixel((0, 0)) == (255, 255, 255)
        assert img.getpixel((14, 14)) == (0x21, 0x66, 0xAC)


def test_zero_field_is_blank(tmp_path):
    grid = Grid.uniform(2, 3)
    path = render_field_image(
        bump_state(grid), "ut", None, tmp_path / "ut.png", pixels_per_node=1
    )
    with Image.open(path) as img:
        assert img.size == (5, 5)
        assert set(img.getdata()) == {(255, 255, 255)}


def test_field_plane():
    grid = Grid.uniform(3, 3)
    state = bump_state(grid)
    plane = field_plane(state, "u", None)
    assert plane.shape == (5, 5)
    assert plane[2, 2] == pytest.approx(0.1)
    assert np.all(field_plane(state, "u", 1) == 0.0)
    with pytest.raises(ValueError):
        field_plane(state, "sigma", 0)
    with pytest.raises(ValueError):
        field_plane(state, "u", 3)
