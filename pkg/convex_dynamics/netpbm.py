"""Binary Netpbm images: P5 (grayscale) and P6 (RGB), 8-bit samples."""
import io
import logging

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)

MAGIC = {b'P5': 'L', b'P6': 'RGB'}


class NetpbmError(ValueError):
    """Raised on malformed or unsupported Netpbm data."""


def _load(source, magic):
    if magic not in MAGIC:
        raise NetpbmError("Unsupported magic %r, expected P5 or P6" % magic)

    try:
        image = Image.open(source)
        image.load()
    except (OSError, ValueError, SyntaxError) as error:
        raise NetpbmError("Invalid %s image: %s" % (magic.decode('ascii'), error))

    # Samples above 8 bits open as 32-bit integer images
    if image.mode != MAGIC[magic]:
        raise NetpbmError("Unsupported %s image mode %s, only 8-bit samples are read" % (magic.decode('ascii'), image.mode))
    if image.width <= 0 or image.height <= 0:
        raise NetpbmError("Invalid image size %dx%d" % image.size)
    return np.array(image, dtype=np.uint8)


def decode(data):
    """Decode P5/P6 bytes; samples with maxval below 255 are rescaled to 0..255.

    :param bytes data: file contents.
    :return numpy.ndarray: uint8 array of shape (rows, cols) for P5 or (rows, cols, 3) for P6.
    """
    return _load(io.BytesIO(data), data[:2])


def _image(pixels):
    pixels = np.asarray(pixels)
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[:, :, 0]

    if pixels.ndim not in (2, 3) or (pixels.ndim == 3 and pixels.shape[2] != 3):
        raise NetpbmError("Cannot encode an array of shape %s" % (pixels.shape,))
    if pixels.dtype != np.uint8:
        raise NetpbmError("Expected uint8 samples, got %s" % pixels.dtype)
    return Image.fromarray(np.ascontiguousarray(pixels))


def encode(pixels):
    """Encode a uint8 array of shape (rows, cols) or (rows, cols, 3) as P5/P6 bytes."""
    buffer = io.BytesIO()
    _image(pixels).save(buffer, format='PPM')
    return buffer.getvalue()


def read_image(path):
    """Read a P5/P6 file into a uint8 array."""
    with io.open(path, 'rb') as image_file:
        magic = image_file.read(2)
        image_file.seek(0)
        pixels = _load(image_file, magic)
    log.debug("Read %s image from %s", 'x'.join(str(size) for size in pixels.shape), path)
    return pixels


def write_image(path, pixels):
    """Write a uint8 array as a P5/P6 file."""
    image = _image(pixels)
    image.save(path, format='PPM')
    log.debug("Wrote %s image to %s", image.mode, path)
