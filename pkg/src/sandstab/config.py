"""Height configurations and their on-disk formats.

JSON: ``{"d": 2, "lo": [..], "hi": [..], "heights": [row-major ints]}``.

Binary (little-endian): ``b"ASM1"``, u32 d, d x u32 shape, d x i32 lo,
then prod(shape) x u32 heights in row-major order.
"""
from dataclasses import dataclass
import json
import struct

import numpy as np

from .lattice import Volume

MAGIC = b"ASM1"


@dataclass(frozen=True, eq=False)
class HeightConfig:
    """Nonnegative integer heights on a box. Immutable: ``heights`` is read-only."""

    volume: Volume
    heights: np.ndarray

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.int64, copy=True).reshape(self.volume.shape)
        if (h < 0).any():
            raise ValueError("heights must be nonnegative")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @classmethod
    def constant(cls, V, value):
        return cls(V, np.full(V.shape, value, dtype=np.int64))

    @property
    def d(self):
        return self.volume.d

    def __getitem__(self, x):
        return int(self.heights[tuple(c - a for c, a in zip(x, self.volume.lo))])

    def __eq__(self, other):
        if not isinstance(other, HeightConfig):
            return NotImplemented
        return self.volume == other.volume and np.array_equal(self.heights, other.heights)

    def __hash__(self):
        return hash((self.volume, self.heights.tobytes()))

    def is_stable(self):
        return bool((self.heights <= 2 * self.d).all())

    def total(self):
        return int(self.heights.sum())

    def restrict(self, W):
        return HeightConfig(W, self.heights[W.slices_in(self.volume)])

    def __add__(self, other):
        if isinstance(other, HeightConfig):
            if other.volume != self.volume:
                raise ValueError("volumes differ")
            other = other.heights
        return HeightConfig(self.volume, self.heights + np.asarray(other, dtype=np.int64))

    def to_json(self):
        V = self.volume
        return {"d": V.d, "lo": list(V.lo), "hi": list(V.hi), "heights": self.heights.reshape(-1).tolist()}

    @classmethod
    def from_json(cls, obj):
        V = Volume(obj["lo"], obj["hi"])
        if "d" in obj and int(obj["d"]) != V.d:
            raise ValueError("d does not match lo/hi")
        return cls(V, np.asarray(obj["heights"], dtype=np.int64).reshape(V.shape))

    def to_bytes(self):
        V = self.volume
        if self.heights.max(initial=0) > 0xFFFFFFFF:
            raise OverflowError("height does not fit in u32")
        head = MAGIC + struct.pack(f"<I{V.d}I{V.d}i", V.d, *V.shape, *V.lo)
        return head + self.heights.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != MAGIC:
            raise ValueError("not an ASM1 file")
        (d,) = struct.unpack_from("<I", data, 4)
        fields = struct.unpack_from(f"<{d}I{d}i", data, 8)
        shape, lo = fields[:d], fields[d:]
        off = 8 + 8 * d
        n = int(np.prod(shape))
        heights = np.frombuffer(data, dtype="<u4", count=n, offset=off).astype(np.int64)
        V = Volume(lo, tuple(a + s - 1 for a, s in zip(lo, shape)))
        return cls(V, heights.reshape(shape))


def load(path):
    """Read a configuration from ``.json`` or ASM1 binary (sniffed by magic)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        return HeightConfig.from_bytes(data)
    return HeightConfig.from_json(json.loads(data))


def save(config, path):
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump(config.to_json(), fh)
    else:
        with open(path, "wb") as fh:
            fh.write(config.to_bytes())
