"""Multi-channel image toy data: PPM I/O, rotation augmentation, channel descriptors.

The miniature turntable set mimics a multi-view object library at 32x32:
each object is a flat-coloured body seen from 72 viewpoints (5 degree
steps) with a marker that slides across the body as the object turns. The
marker is drawn in both the red and the green channel, with different
intensities, so the two channels encode the same structure numerically
differently.
"""

import re
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from ..affinity import DescriptorSet

CHANNELS = {"R": 0, "G": 1, "B": 2}
ROTATIONS = tuple(range(-5, 6))

# base view angles reproducing the restricted selections of the two objects
ANGLE_SETS = {
    "can": tuple(range(0, 120, 5)),
    "bear": tuple(range(0, 95, 5)) + tuple(range(270, 360, 5)),
}


class PPMError(ValueError):
    """Malformed or truncated PPM data; the message carries the byte offset."""


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*([^\s#]+)")


def _header_tokens(data, n):
    pos, out = 0, []
    while len(out) < n:
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PPMError(f"malformed header at byte {pos}")
        out.append((m.group(1), m.start(1)))
        pos = m.end(1)
    return out, pos


def parse_ppm(data):
    """Decode P3 or P6 bytes into an ``H x W x 3`` float array in ``[0, 255]``."""
    tokens, pos = _header_tokens(data, 4)
    magic, off = tokens[0]
    if magic not in (b"P3", b"P6"):
        raise PPMError(f"unsupported magic {magic!r} at byte {off}")
    values = []
    for tok, off in tokens[1:]:
        if not tok.isdigit():
            raise PPMError(f"expected a positive integer at byte {off}, found {tok[:16]!r}")
        values.append(int(tok))
    width, height, maxval = values
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise PPMError(f"invalid dimensions or maxval in header ending at byte {pos}")
    n = width * height * 3
    if magic == b"P6":
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PPMError(f"missing whitespace after header at byte {pos}")
        pos += 1
        width_bytes = 1 if maxval < 256 else 2
        need = n * width_bytes
        if len(data) - pos < need:
            raise PPMError(f"truncated payload at byte {len(data)}: expected {need} bytes from byte {pos}")
        dtype = np.uint8 if width_bytes == 1 else np.dtype(">u2")
        raw = np.frombuffer(data, dtype=dtype, count=n, offset=pos).astype(float)
    else:
        raw = []
        for m in re.finditer(rb"#[^\n]*|(\S+)", data[pos:]):
            tok = m.group(1)
            if tok is None:
                continue
            if not tok.isdigit():
                raise PPMError(f"expected an integer sample at byte {pos + m.start(1)}, found {tok[:16]!r}")
            raw.append(int(tok))
            if len(raw) == n:
                break
        if len(raw) < n:
            raise PPMError(f"truncated payload at byte {len(data)}: expected {n} samples, found {len(raw)}")
        raw = np.array(raw, dtype=float)
    if raw.max(initial=0) > maxval:
        raise PPMError(f"sample exceeds maxval {maxval}")
    img = raw.reshape(height, width, 3)
    if maxval != 255:
        img = img * (255.0 / maxval)
    return img


def load_ppm(path):
    with open(path, "rb") as fh:
        return parse_ppm(fh.read())


def encode_ppm(img, binary=True):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 image, got shape {img.shape}")
    px = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = px.shape[:2]
    if binary:
        return f"P6\n{w} {h}\n255\n".encode("ascii") + px.tobytes()
    rows = [" ".join(str(v) for v in row) for row in px.reshape(h, w * 3).tolist()]
    return (f"P3\n{w} {h}\n255\n" + "\n".join(rows) + "\n").encode("ascii")


def write_ppm(path, img, binary=True):
    with open(path, "wb") as fh:
        fh.write(encode_ppm(img, binary))


def write_pgm(path, values, vmax=None):
    """Grayscale P5 image; values map linearly from ``[0, vmax]`` to ``[0, 255]``."""
    values = np.asarray(values, dtype=float)
    vmax = float(values.max()) if vmax is None else float(vmax)
    scaled = np.zeros_like(values) if vmax <= 0 else np.clip(values / vmax, 0, 1) * 255
    px = np.rint(scaled).astype(np.uint8)
    h, w = px.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii") + px.tobytes())


def rotate_image(img, degrees):
    """Rotate counter-clockwise (as displayed) about the image centre.

    Bilinear interpolation; samples falling outside the input are 0.
    Multiples of 90 degrees use exact cosines, so they permute pixels on
    square images.
    """
    img = np.asarray(img, dtype=float)
    if degrees == 0:
        return img.copy()
    theta = np.deg2rad(degrees)
    quarter = degrees / 90.0
    if quarter == int(quarter):
        cos, sin = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(quarter) % 4]
    else:
        cos, sin = np.cos(theta), np.sin(theta)
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    dx, dy = xx - cx, yy - cy
    # inverse map; image rows grow downwards
    sx = cos * dx - sin * dy + cx
    sy = sin * dx + cos * dy + cy
    coords = np.array([sy, sx])
    if img.ndim == 2:
        return map_coordinates(img, coords, order=1, mode="constant", cval=0.0)
    return np.stack(
        [map_coordinates(img[..., k], coords, order=1, mode="constant", cval=0.0) for k in range(img.shape[2])],
        axis=-1,
    )


@dataclass
class ImageStack:
    """Equal-sized RGB images with their view and augmentation angles."""

    images: list
    view_angles: list
    augmentation_angles: list
    sample_ids: list = None
    masks: list = field(default=None, repr=False)

    def __post_init__(self):
        if not self.images:
            raise ValueError("image stack is empty")
        shapes = {np.shape(im) for im in self.images}
        if len(shapes) != 1:
            raise ValueError(f"images must share one shape, got {sorted(shapes)}")
        if not (len(self.view_angles) == len(self.augmentation_angles) == len(self.images)):
            raise ValueError("one view and one augmentation angle per image are required")
        if self.sample_ids is None:
            self.sample_ids = [f"v{v:03d}_r{a:+d}" for v, a in zip(self.view_angles, self.augmentation_angles)]

    @property
    def shape(self):
        return np.shape(self.images[0])

    def __len__(self):
        return len(self.images)


def channel_descriptors(stack, channels=("R", "G")):
    """One descriptor per channel; every row is a flattened (row-major) channel."""
    if not channels:
        raise ValueError("at least one channel is required")
    data = np.stack([np.asarray(im, dtype=float) for im in stack.images])
    mats = []
    for ch in channels:
        if ch not in CHANNELS:
            raise ValueError(f"unknown channel {ch!r}; expected one of {sorted(CHANNELS)}")
        mats.append(data[..., CHANNELS[ch]].reshape(len(stack), -1))
    return DescriptorSet(mats, descriptor_names=list(channels), sample_ids=list(stack.sample_ids))


def augment(images, view_angles, rotations=ROTATIONS, masks=None):
    """Every base image rotated by every angle in ``rotations``."""
    out, views, rots, out_masks = [], [], [], []
    for k, (im, v) in enumerate(zip(images, view_angles)):
        for r in rotations:
            out.append(rotate_image(im, r))
            views.append(v)
            rots.append(r)
            if masks is not None:
                out_masks.append(rotate_image(masks[k].astype(float), r) >= 0.5)
    return ImageStack(out, views, rots, masks=out_masks if masks is not None else None)


# miniature turntable objects: body colour, body half-size, marker colour
OBJECTS = {
    "can": dict(body=(200.0, 40.0, 30.0), half=(9.0, 13.0), marker=(90.0, 230.0, 200.0), marker_half=3.0),
    "bear": dict(body=(150.0, 100.0, 60.0), half=(11.0, 11.0), marker=(40.0, 200.0, 120.0), marker_half=2.5),
    "cup": dict(body=(60.0, 90.0, 210.0), half=(8.0, 10.0), marker=(230.0, 20.0, 120.0), marker_half=2.5),
}


def render_view(name, angle, size=32):
    """Render one view; returns ``(image, marker_mask)``.

    The body is an axis-aligned ellipse whose apparent width follows the
    turntable angle; the marker is a square on the body surface facing
    ``angle`` degrees, visible on the front half only.
    """
    obj = OBJECTS[name]
    h = w = int(size)
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    c = (size - 1) / 2.0
    a = np.deg2rad(angle)
    ax = obj["half"][0] * (0.8 + 0.2 * abs(np.cos(a)))
    ay = obj["half"][1]
    body = ((xx - c) / ax) ** 2 + ((yy - c) / ay) ** 2 <= 1.0
    img = np.zeros((h, w, 3))
    img[body] = obj["body"]
    mask = np.zeros((h, w), dtype=bool)
    if np.cos(a) > 0.1:
        mx = c + 0.7 * ax * np.sin(a)
        mh = obj["marker_half"]
        mask = (np.abs(xx - mx) <= mh * max(np.cos(a), 0.4)) & (np.abs(yy - c + 2.0) <= mh) & body
        img[mask] = obj["marker"]
    return img, mask


def turntable(name, angles=None, size=32):
    """Base views of one object; defaults to 72 views at 5 degree steps."""
    if name not in OBJECTS:
        raise ValueError(f"unknown object {name!r}; expected one of {sorted(OBJECTS)}")
    angles = list(range(0, 360, 5)) if angles is None else list(angles)
    views = [render_view(name, a, size) for a in angles]
    return [v[0] for v in views], angles, [v[1] for v in views]


def synthetic_stack(name, angles=None, rotations=ROTATIONS, size=32):
    """Augmented image stack of one miniature object.

    ``angles`` defaults to the object's restricted set in ``ANGLE_SETS``
    (all 72 views for objects without one).
    """
    if angles is None:
        angles = ANGLE_SETS.get(name)
    images, views, masks = turntable(name, angles, size)
    stack = augment(images, views, rotations, masks)
    stack.sample_ids = [f"{name}_v{v:03d}_r{r:+d}" for v, r in zip(stack.view_angles, stack.augmentation_angles)]
    return stack
