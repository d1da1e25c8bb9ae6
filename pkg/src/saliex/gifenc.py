"""Minimal deterministic GIF89a writer with a fixed uniform palette.

Only what the wiggle output needs: full-frame images, one global 256-color
table (252 colors from uniform 6x7x6 RGB quantization plus black padding),
LZW compression, and the Netscape looping extension.

Format references: w3.org/Graphics/GIF/spec-gif89a.txt,
matthewflickinger.com/lab/whatsinagif.
"""
from __future__ import annotations

import struct

import numpy as np

_MIN_CODE_SIZE = 8
_R_LEVELS, _G_LEVELS, _B_LEVELS = 6, 7, 6


def uniform_palette() -> np.ndarray:
    """The 256-entry global color table as a (256, 3) uint8 array."""
    palette = np.zeros((256, 3), dtype=np.uint8)
    i = 0
    for r in range(_R_LEVELS):
        for g in range(_G_LEVELS):
            for b in range(_B_LEVELS):
                palette[i] = (
                    int(r * 255 / (_R_LEVELS - 1) + 0.5),
                    int(g * 255 / (_G_LEVELS - 1) + 0.5),
                    int(b * 255 / (_B_LEVELS - 1) + 0.5),
                )
                i += 1
    return palette


def quantize_uniform(img: np.ndarray) -> np.ndarray:
    """Map an RGB uint8 image to palette indices (nearest level per channel)."""
    img = np.asarray(img, dtype=np.int64)
    ri = (img[..., 0] * (_R_LEVELS - 1) * 2 + 255) // 510
    gi = (img[..., 1] * (_G_LEVELS - 1) * 2 + 255) // 510
    bi = (img[..., 2] * (_B_LEVELS - 1) * 2 + 255) // 510
    return ((ri * _G_LEVELS + gi) * _B_LEVELS + bi).astype(np.uint8)


class _BitPacker:
    """Accumulates variable-width codes LSB-first into a byte string."""

    def __init__(self):
        self._acc = 0
        self._nbits = 0
        self._out = bytearray()

    def write(self, code: int, nbits: int) -> None:
        self._acc |= code << self._nbits
        self._nbits += nbits
        while self._nbits >= 8:
            self._out.append(self._acc & 0xFF)
            self._acc >>= 8
            self._nbits -= 8

    def finish(self) -> bytes:
        if self._nbits:
            self._out.append(self._acc & 0xFF)
        return bytes(self._out)


def lzw_encode(indices: bytes, min_code_size: int = _MIN_CODE_SIZE) -> bytes:
    """GIF-variant LZW: emits a leading clear code and resets on a full table."""
    clear = 1 << min_code_size
    end = clear + 1
    packer = _BitPacker()
    code_len = min_code_size + 1
    table: dict[int, int] = {}  # (prefix code << 8) | next byte -> code
    next_code = end + 1
    packer.write(clear, code_len)
    prev = indices[0]
    for byte in indices[1:]:
        key = (prev << 8) | byte
        code = table.get(key)
        if code is not None:
            prev = code
            continue
        packer.write(prev, code_len)
        if next_code < 4096:
            table[key] = next_code
            if next_code == (1 << code_len) and code_len < 12:
                code_len += 1
            next_code += 1
        else:
            packer.write(clear, code_len)
            table.clear()
            code_len = min_code_size + 1
            next_code = end + 1
        prev = byte
    packer.write(prev, code_len)
    packer.write(end, code_len)
    return packer.finish()


def _sub_blocks(data: bytes) -> bytes:
    out = bytearray()
    for i in range(0, len(data), 255):
        chunk = data[i:i + 255]
        out.append(len(chunk))
        out.extend(chunk)
    out.append(0)
    return bytes(out)


def encode_gif(frames: list[np.ndarray], delay_cs: int, loop: int = 0) -> bytes:
    """Encode RGB uint8 frames of equal size as a looping animated GIF.

    delay_cs is the per-frame delay in centiseconds; loop 0 means forever.
    """
    if not frames:
        raise ValueError("at least one frame required")
    h, w = frames[0].shape[:2]
    out = bytearray()
    out.extend(b"GIF89a")
    # logical screen: global color table present, 8 bits/channel, 256 entries
    out.extend(struct.pack("<HH", w, h))
    out.extend(bytes([0xF7, 0x00, 0x00]))
    out.extend(uniform_palette().tobytes())
    # Netscape looping extension
    out.extend(b"\x21\xFF\x0BNETSCAPE2.0\x03\x01")
    out.extend(struct.pack("<H", loop))
    out.append(0)
    for frame in frames:
        if frame.shape[:2] != (h, w):
            raise ValueError("all frames must share dimensions")
        # graphic control: disposal 'do not dispose', no transparency
        out.extend(b"\x21\xF9\x04\x04")
        out.extend(struct.pack("<H", delay_cs))
        out.extend(b"\x00\x00")
        out.append(0x2C)
        out.extend(struct.pack("<HHHH", 0, 0, w, h))
        out.append(0x00)
        out.append(_MIN_CODE_SIZE)
        indices = quantize_uniform(frame).tobytes()
        out.extend(_sub_blocks(lzw_encode(indices)))
    out.append(0x3B)
    return bytes(out)
