"""Escape-time fields and deterministic composite images.

Per-pixel forward iteration of z -> exp(z) + kappa until the real part
crosses an escape threshold, plus overlay drawing for traced rays and
orbit point clouds.  All raster operations are integer-deterministic so
identical inputs reproduce identical bytes.
"""

import cmath
import dataclasses
import math
from typing import Optional

import numpy as np

from .addresses import golden_mean_address, prepend
from .config import DEFAULT
from .exceptions import PreconditionError
from .rays import Parameter, RayTrace, siegel, trace_ray

NOT_ESCAPED = -1

_GOLDEN_THETA = (math.sqrt(5.0) - 1.0) / 2.0


# -- geometry --------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class Viewport:
    """Axis-aligned window in the plane mapped onto a pixel grid."""

    center: complex
    width: float
    height: float
    px_width: int
    px_height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise PreconditionError("viewport extents must be positive")
        if self.px_width < 1 or self.px_height < 1:
            raise PreconditionError("viewport needs at least one pixel")
        if abs(self.width / self.height
               - self.px_width / self.px_height) > 1e-12:
            raise PreconditionError(
                "pixel aspect must match the plane aspect"
            )

    def pixel_centers(self) -> np.ndarray:
        xs = (self.center.real - self.width / 2.0
              + (np.arange(self.px_width) + 0.5) * self.width / self.px_width)
        ys = (self.center.imag + self.height / 2.0
              - (np.arange(self.px_height) + 0.5) * self.height / self.px_height)
        return xs[None, :] + 1j * ys[:, None]

    def to_pixel(self, z: complex):
        """Float pixel coordinates (col, row) of a plane point."""
        col = ((z.real - (self.center.real - self.width / 2.0))
               / self.width * self.px_width - 0.5)
        row = (((self.center.imag + self.height / 2.0) - z.imag)
               / self.height * self.px_height - 0.5)
        return col, row


@dataclasses.dataclass(frozen=True)
class ImageField:
    """Escape counts per pixel; NOT_ESCAPED marks bounded-looking orbits."""

    viewport: Viewport
    counts: np.ndarray
    max_iter: int
    escape_re: float


def escape_field(p: Parameter, v: Viewport, max_iter: int = 512,
                 escape_re: float = 50.0) -> ImageField:
    """Iterate every pixel center until Re z crosses escape_re.

    The recorded count is the number of applied iterations; pixels whose
    center already sits past the threshold record 0.  Overflow counts as
    escape at that step.
    """
    if max_iter < 1:
        raise PreconditionError("max_iter must be >= 1")
    zs = v.pixel_centers().astype(np.complex128)
    counts = np.full(zs.shape, NOT_ESCAPED, dtype=np.int32)
    gone = ~(zs.real <= escape_re)  # catches NaN centers too
    counts[gone] = 0
    active = ~gone
    kappa = complex(p.kappa)
    for step in range(1, max_iter + 1):
        if not active.any():
            break
        with np.errstate(over="ignore", invalid="ignore"):
            zs[active] = np.exp(zs[active]) + kappa
        out = active & ((zs.real > escape_re) | ~np.isfinite(zs.real)
                        | ~np.isfinite(zs.imag))
        counts[out] = step
        active &= ~out
    return ImageField(v, counts, max_iter, escape_re)


# -- orbits ----------------------------------------------------------------

OVERFLOW_MARKER = complex(math.inf, math.inf)


def _orbit_from(kappa: complex, z0: complex, n: int) -> list:
    if n < 0:
        raise PreconditionError("orbit length must be >= 0")
    out: list = []
    z = complex(z0)
    for i in range(n):
        out.append(z)
        if i + 1 == n:
            break
        try:
            z = cmath.exp(z) + kappa
        except OverflowError:
            out.append(OVERFLOW_MARKER)
            break
    return out


def singular_orbit(p: Parameter, n: int) -> list:
    """First n forward images of kappa, starting at kappa itself.

    Stops early with OVERFLOW_MARKER as the final element when the next
    image cannot be represented.
    """
    return _orbit_from(p.kappa, p.kappa, n)


def interior_orbit(p: Parameter, z0: complex, n: int) -> list:
    """Forward orbit of an arbitrary seed, same early-stop contract."""
    return _orbit_from(p.kappa, z0, n)


# -- color and drawing -----------------------------------------------------


def _tri(i: int, period: int, phase: int) -> int:
    """Integer triangle wave on [0, 255]; fully portable arithmetic."""
    x = (i + phase) % period
    half = period // 2
    up = x * 255 // half if x < half else (period - x) * 255 // half
    return max(0, min(255, up))


RAMP = tuple(
    (_tri(i, 512, 96), _tri(i, 256, 48), _tri(i, 128, 0)) for i in range(256)
)

INTERIOR_COLOR = (12, 12, 28)


@dataclasses.dataclass(frozen=True)
class Style:
    """Overlay colors and geometry; viewport, when set, must match the field."""

    ramp: tuple = RAMP
    ray_color: tuple = (255, 255, 255)
    orbit_color: tuple = (255, 190, 40)
    dot_radius_px: int = 2
    interior_color: tuple = INTERIOR_COLOR
    viewport: Optional[Viewport] = None


def _colorize(field: ImageField, style: Style) -> np.ndarray:
    ramp = np.asarray(style.ramp, dtype=np.uint8)
    counts = field.counts
    img = np.zeros(counts.shape + (3,), dtype=np.uint8)
    escaped = counts != NOT_ESCAPED
    img[~escaped] = np.asarray(style.interior_color, dtype=np.uint8)
    img[escaped] = ramp[counts[escaped] % 256]
    return img


def _clip_segment(x0, y0, x1, y1, w, h):
    """Liang-Barsky clip to the pixel rectangle; None when fully outside."""
    t0, t1 = 0.0, 1.0
    dx, dy = x1 - x0, y1 - y0
    for p, q in (
        (-dx, x0 - (-0.5)),
        (dx, (w - 0.5) - x0),
        (-dy, y0 - (-0.5)),
        (dy, (h - 0.5) - y0),
    ):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    return (x0 + t0 * dx, y0 + t0 * dy, x0 + t1 * dx, y0 + t1 * dy)


def _draw_line(img: np.ndarray, a, b, color) -> None:
    h, w = img.shape[:2]
    clipped = _clip_segment(a[0], a[1], b[0], b[1], w, h)
    if clipped is None:
        return
    x0, y0, x1, y1 = (int(round(v)) for v in clipped)
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= x0 < w and 0 <= y0 < h:
            img[y0, x0] = color
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _draw_dot(img: np.ndarray, center, radius: int, color) -> None:
    h, w = img.shape[:2]
    cx, cy = int(round(center[0])), int(round(center[1]))
    if cx < -radius or cy < -radius or cx >= w + radius or cy >= h + radius:
        return
    for y in range(cy - radius, cy + radius + 1):
        for x in range(cx - radius, cx + radius + 1):
            if (x - cx) ** 2 + (y - cy) ** 2 <= radius * radius:
                if 0 <= x < w and 0 <= y < h:
                    img[y, x] = color


def render_composite(field: ImageField, rays=(), orbits=(),
                     style: Optional[Style] = None) -> np.ndarray:
    """Colorized field with ray polylines and orbit dots burned in."""
    style = style or Style()
    if style.viewport is not None and style.viewport != field.viewport:
        raise PreconditionError("style viewport does not match the field")
    img = _colorize(field, style)
    v = field.viewport
    color = np.asarray(style.ray_color, dtype=np.uint8)
    for trace in rays:
        pts = [v.to_pixel(s.z) for s in trace.samples]
        for a, b in zip(pts, pts[1:]):
            _draw_line(img, a, b, color)
    dot = np.asarray(style.orbit_color, dtype=np.uint8)
    for orbit in orbits:
        for z in orbit:
            if z is None or not (math.isfinite(z.real) and math.isfinite(z.imag)):
                continue
            _draw_dot(img, v.to_pixel(z), style.dot_radius_px, dot)
    return img


# -- file output -----------------------------------------------------------


def _check_image(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise PreconditionError("image must be a nonempty H x W x 3 array")
    return arr


def ppm_bytes(image: np.ndarray) -> bytes:
    arr = _check_image(image)
    h, w = arr.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + arr.tobytes()


def write_ppm(image: np.ndarray, path: str) -> None:
    data = ppm_bytes(image)
    with open(path, "wb") as fh:
        fh.write(data)


def write_png(image: np.ndarray, path: str) -> None:
    from PIL import Image

    arr = _check_image(image)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


# -- recipes ---------------------------------------------------------------


def julia(p: Parameter, view: Optional[Viewport] = None, max_iter: int = 512,
          style: Optional[Style] = None) -> np.ndarray:
    """Plain escape-time picture of the dynamical plane."""
    if view is None:
        view = Viewport(0j, 8.0, 8.0, 640, 640)
    return render_composite(escape_field(p, view, max_iter), style=style)


def figure_one(px_width: int = 800, px_height: int = 800, max_iter: int = 512,
               orbit_len: int = 10000, samples: int = 300,
               style: Optional[Style] = None) -> np.ndarray:
    """Siegel-disk composite: escape field, the golden-combinatorics ray
    and its preimage ray, the singular orbit, and an interior orbit."""
    p = siegel(_GOLDEN_THETA)
    g = golden_mean_address()
    z0 = complex(0.0, 2.0 * math.pi * _GOLDEN_THETA)
    view = Viewport(
        complex(z0.real + 0.6, z0.imag + 0.7),
        9.0, 9.0 * px_height / px_width, px_width, px_height,
    )
    field = escape_field(p, view, max_iter)
    rays = [
        trace_ray(p, g, 9.0, DEFAULT.t_min_hint, samples),
        trace_ray(p, prepend(0, g), 9.0, DEFAULT.t_min_hint, samples),
    ]
    orbits = [
        singular_orbit(p, orbit_len),
        interior_orbit(p, z0 + 0.4 * (p.kappa - z0), 600),
    ]
    return render_composite(field, rays, orbits, style)
