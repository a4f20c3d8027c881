#!/usr/bin/env python3
"""
SampleBatch: seeded array of i.i.d. draws plus binary / CSV persistence
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd

MAGIC = b"STBLSMP1"


@dataclass
class SampleBatch:
    """Draws with the metadata needed to regenerate them"""

    values: np.ndarray
    seed: int
    label: str
    generator: str = "philox"
    meta: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size

    def to_binary(self, path: Union[str, Path]) -> None:
        """8-byte magic, little-endian uint64 count, little-endian float64 values"""
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<Q", self.values.size))
            f.write(self.values.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path: Union[str, Path], seed: int = 0, label: str = "") -> "SampleBatch":
        with open(path, "rb") as f:
            magic = f.read(8)
            if magic != MAGIC:
                raise ValueError(f"{path}: not a sample batch file")
            (count,) = struct.unpack("<Q", f.read(8))
            values = np.frombuffer(f.read(8 * count), dtype="<f8")
        if values.size != count:
            raise ValueError(f"{path}: truncated, expected {count} values")
        return cls(values=values.astype(float), seed=seed, label=label or Path(path).stem)

    def to_csv(self, path: Union[str, Path]) -> None:
        pd.DataFrame({"value": self.values}).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Union[str, Path], seed: int = 0, label: str = "") -> "SampleBatch":
        frame = pd.read_csv(path, dtype={"value": float})
        return cls(values=frame["value"].to_numpy(), seed=seed, label=label or Path(path).stem)
