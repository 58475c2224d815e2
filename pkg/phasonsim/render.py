"""Rendering of field previews to PNG."""

import logging
from pathlib import Path

import numpy as np
from PIL import Image, ImageColor

from phasonsim import (
    DEFAULT_NEGATIVE_COLOR,
    DEFAULT_PIXELS_PER_NODE,
    DEFAULT_POSITIVE_COLOR,
    DEFAULT_ZERO_COLOR,
)

from .dynamics import FieldState

LOGGER = logging.getLogger(__name__)

FIELD_NAMES = ("u", "ut", "nu")


def _blend(
    a: tuple[int, ...], b: tuple[int, ...], weight: float
) -> tuple[int, int, int]:
    return (
        int(round(a[0] + (b[0] - a[0]) * weight)),
        int(round(a[1] + (b[1] - a[1]) * weight)),
        int(round(a[2] + (b[2] - a[2]) * weight)),
    )


def field_plane(state: FieldState, field: str, component: int | None) -> np.ndarray:
    """
    The 2D array to draw: one component (0, 1, 2) or, with ``component`` None,
    the pointwise length.  3D grids are cut at the middle x₃ node.
    """
    if field not in FIELD_NAMES:
        raise ValueError(f"field must be one of {FIELD_NAMES}, not {field}")
    values = getattr(state, field).values
    if component is None:
        plane = np.sqrt(np.sum(values**2, axis=0))
    elif 0 <= component < 3:
        plane = values[component]
    else:
        raise ValueError(f"component must be 0, 1 or 2, not {component}")
    if plane.ndim == 3:
        plane = plane[:, :, plane.shape[2] // 2]
    return plane


def render_field_image(
    state: FieldState,
    field: str,
    component: int | None,
    path: str | Path,
    negative_color: str = DEFAULT_NEGATIVE_COLOR,
    zero_color: str = DEFAULT_ZERO_COLOR,
    positive_color: str = DEFAULT_POSITIVE_COLOR,
    pixels_per_node: int = DEFAULT_PIXELS_PER_NODE,
) -> Path:
    """
    Draws one node per pixel on a colour scale symmetric about zero, then scales
    the image up.  x₁ runs to the right, x₂ upwards.
    """
    plane = field_plane(state, field, component)
    scale = float(np.max(np.abs(plane)))
    neg = ImageColor.getrgb(negative_color)
    zero = ImageColor.getrgb(zero_color)
    pos = ImageColor.getrgb(positive_color)

    nx, ny = plane.shape
    img = Image.new("RGB", (nx, ny), zero[:3])
    if scale > 0:
        for i in range(nx):
            for j in range(ny):
                v = plane[i, j] / scale
                color = _blend(zero, pos, v) if v >= 0 else _blend(zero, neg, -v)
                img.putpixel((i, ny - 1 - j), color)
    else:
        LOGGER.debug(f"{field} is identically zero at t={state.t:g}")

    if pixels_per_node > 1:
        img = img.resize(
            (nx * pixels_per_node, ny * pixels_per_node), Image.Resampling.NEAREST
        )
    path = Path(path)
    img.save(path, format="PNG")
    LOGGER.debug(f"Rendered {field}[{component}] at t={state.t:g} to {path}")
    return path
