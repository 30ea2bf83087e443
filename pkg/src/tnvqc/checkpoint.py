"""Binary checkpoint container for trained models.

Layout (all integers uint32, all reals float64, little-endian)::

    magic      8 bytes  b"TNVQCKPT"
    version    u32      currently 1
    mode       u32      0 = pca-vqc, 1 = mps-classifier, 2 = mps-vqc
    n_sites    u32      0 when no MPS block
    chi        u32      0 when no MPS block
    d_out      u32      0 when no MPS block
    out_site   u32      zero-based output-site index
    flags      u32      bit 0 MPS block, bit 1 VQC block, bit 2 PCA block
    [MPS]      every site tensor in site order, true shape, row-major
    [VQC]      12 reals
    [PCA]      n_features u32, n_components u32, mean, components (row-major),
               explained variances
    crc32      u32      over every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .features import PcaModel
from .mps import MpsModel, _bond_extents
from .vqc import N_PARAMS

MAGIC = b"TNVQCKPT"
VERSION = 1
MODES = ("pca-vqc", "mps-classifier", "mps-vqc")

_HEADER = struct.Struct("<8s7I")

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "MAGIC", "VERSION"]


@dataclass
class Checkpoint:
    mode: str
    mps: MpsModel | None = None
    vqc_params: np.ndarray | None = None
    pca: PcaModel | None = None


def _f64(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def dumps(ckpt: Checkpoint) -> bytes:
    mps = ckpt.mps
    flags = (mps is not None) | (ckpt.vqc_params is not None) << 1 | (ckpt.pca is not None) << 2
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        MODES.index(ckpt.mode),
        mps.n_sites if mps else 0,
        mps.bond_dim if mps else 0,
        mps.output_dim if mps else 0,
        mps.output_site if mps else 0,
        flags,
    )
    parts = [header]
    if mps is not None:
        parts.extend(_f64(site) for site in mps.sites)
    if ckpt.vqc_params is not None:
        parts.append(_f64(np.reshape(ckpt.vqc_params, N_PARAMS)))
    if ckpt.pca is not None:
        pca = ckpt.pca
        parts.append(struct.pack("<2I", pca.mean.size, pca.n_components))
        parts += [_f64(pca.mean), _f64(pca.components), _f64(pca.explained_variances)]
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(dumps(ckpt))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated checkpoint: need {n} more bytes", offset=self.pos)
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def reals(self, shape) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)


def loads(buf: bytes) -> Checkpoint:
    if len(buf) < _HEADER.size + 4:
        raise FormatError("truncated checkpoint header", offset=len(buf))
    magic, version, mode, n_sites, chi, d_out, out_site, flags = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=8)
    if mode >= len(MODES):
        raise FormatError(f"unknown mode code {mode}", offset=12)
    (crc,) = struct.unpack_from("<I", buf, len(buf) - 4)
    if zlib.crc32(buf[:-4]) != crc:
        raise FormatError("checkpoint checksum mismatch (truncated or corrupt)", offset=len(buf) - 4)
    reader = _Reader(buf[:-4])
    reader.pos = _HEADER.size
    ckpt = Checkpoint(mode=MODES[mode])
    if flags & 1:
        if n_sites < 1 or chi < 1 or d_out < 1 or out_site >= n_sites:
            raise FormatError("inconsistent MPS dimensions in header", offset=16)
        cores = np.zeros((n_sites, chi, 2, chi))
        out_core = np.zeros((chi, 2, chi, d_out))
        for i in range(n_sites):
            cl, cr = _bond_extents(n_sites, chi, i)
            if i == out_site:
                out_core[:cl, :, :cr, :] = reader.reals((cl, 2, cr, d_out))
            else:
                cores[i, :cl, :, :cr] = reader.reals((cl, 2, cr))
        ckpt.mps = MpsModel(cores, out_core, out_site)
    if flags & 2:
        ckpt.vqc_params = reader.reals((N_PARAMS,))
    if flags & 4:
        n_feat, n_comp = struct.unpack("<2I", reader.take(8))
        mean = reader.reals((n_feat,))
        comps = reader.reals((n_comp, n_feat))
        var = reader.reals((n_comp,))
        ckpt.pca = PcaModel(mean=mean, components=comps, explained_variances=var)
    if reader.pos != len(reader.buf):
        raise FormatError("trailing bytes after checkpoint payload", offset=reader.pos)
    return ckpt


def load_checkpoint(path) -> Checkpoint:
    return loads(Path(path).read_bytes())
