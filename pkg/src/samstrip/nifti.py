"""NIfTI-1 single-file reader/writer for a restricted, well-defined subset.

Reads little- or big-endian .nii streams (gzip transparently detected via
the 0x1f 0x8b magic) holding uint8, int16, float32 or float64 voxels;
anything else is a hard error rather than a silent coercion. Files are
always written little-endian with the sform carrying the affine.
"""
from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, DegenerateDims, Truncated, UnsupportedDatatype
from .volume import Mask3D, Volume, default_affine

HEADER_SIZE = 348
VOX_OFFSET = 352  # header + 4-byte extension indicator

# struct layout of the 348-byte header (endianness char prepended at use)
_HDR_FMT = (
    "i"      # sizeof_hdr
    "10s18s" # data_type, db_name (unused)
    "ih2s"   # extents, session_error, regular+dim_info
    "8h"     # dim
    "3f"     # intent_p1..p3
    "hhh"    # intent_code, datatype, bitpix
    "h"      # slice_start
    "8f"     # pixdim
    "f"      # vox_offset
    "ff"     # scl_slope, scl_inter
    "h2s"    # slice_end, slice_code+xyzt_units
    "ffff"   # cal_max, cal_min, slice_duration, toffset
    "ii"     # glmax, glmin
    "80s24s" # descrip, aux_file
    "hh"     # qform_code, sform_code
    "3f"     # quatern_b, c, d
    "3f"     # qoffset_x, y, z
    "12f"    # srow_x, srow_y, srow_z
    "16s"    # intent_name
    "4s"     # magic
)
assert struct.calcsize("<" + _HDR_FMT) == HEADER_SIZE

_DTYPES = {2: np.uint8, 4: np.int16, 16: np.float32, 64: np.float64}
_BITPIX = {2: 8, 4: 16, 16: 32, 64: 64}


def _qform_affine(quatern, qoffset, pixdim) -> np.ndarray:
    """Quaternion-coded rotation per the NIfTI-1 standard."""
    b, c, d = (float(v) for v in quatern)
    a = np.sqrt(max(0.0, 1.0 - (b * b + c * c + d * d)))
    rot = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )
    qfac = -1.0 if pixdim[0] == -1.0 else 1.0
    scales = np.array([pixdim[1], pixdim[2], qfac * pixdim[3]])
    affine = np.eye(4)
    affine[:3, :3] = rot * scales
    affine[:3, 3] = qoffset
    return affine


def load_nifti(stream: bytes) -> Volume:
    """Parse a NIfTI-1 byte stream into a Volume.

    Header scaling y = scl_slope*x + scl_inter is applied when scl_slope
    is nonzero and finite. The affine comes from the sform when
    sform_code > 0, else the qform, else diagonal(spacing).
    """
    if len(stream) >= 2 and stream[:2] == b"\x1f\x8b":
        stream = gzip.decompress(stream)
    if len(stream) < 4:
        raise BadMagic("stream shorter than 4 bytes")
    endian = None
    for cand in ("<", ">"):
        if struct.unpack(cand + "i", stream[:4])[0] == HEADER_SIZE:
            endian = cand
            break
    if endian is None:
        raise BadMagic("sizeof_hdr is not 348 in either endianness")
    if len(stream) < HEADER_SIZE:
        raise Truncated(f"header truncated at {len(stream)} bytes")

    fields = struct.unpack(endian + _HDR_FMT, stream[:HEADER_SIZE])
    dim = fields[6:14]
    datatype = fields[18]
    pixdim = fields[21:29]
    vox_offset = fields[29]
    scl_slope, scl_inter = fields[30], fields[31]
    qform_code, qform = fields[42], fields[44:50]
    sform_code, srow = fields[43], fields[50:62]
    magic = fields[63]

    if magic != b"n+1\x00":
        raise BadMagic(f"magic {magic!r} is not a single-file NIfTI-1 stream")
    if not np.isfinite(vox_offset) or vox_offset < VOX_OFFSET:
        raise BadMagic(f"vox_offset {vox_offset} below the single-file minimum of 352")
    if datatype not in _DTYPES:
        raise UnsupportedDatatype(f"datatype code {datatype} not in supported subset")

    ndim = dim[0]
    if ndim < 1 or ndim > 7:
        raise DegenerateDims(f"dim[0] = {ndim} outside 1..7")
    shape = [dim[i] if i <= ndim else 1 for i in (1, 2, 3)]
    if any(v <= 0 for v in shape):
        raise DegenerateDims(f"non-positive dims {tuple(shape)}")
    if ndim > 3 and any(dim[i] > 1 for i in range(4, ndim + 1)):
        raise UnsupportedDatatype("volumes with a 4th dimension are not supported")

    nx, ny, nz = shape
    dt = np.dtype(_DTYPES[datatype]).newbyteorder(endian)
    count = nx * ny * nz
    offset = int(vox_offset)
    if len(stream) < offset + count * dt.itemsize:
        raise Truncated(
            f"payload needs {count * dt.itemsize} bytes at offset {offset}, "
            f"stream has {len(stream)}"
        )
    raw = np.frombuffer(stream, dtype=dt, count=count, offset=offset)
    data = raw.astype(np.float64)
    if np.isfinite(scl_slope) and scl_slope != 0.0:
        data = data * float(scl_slope) + float(scl_inter)
    data = data.reshape((nx, ny, nz), order="F")

    spacing = tuple(float(pixdim[i]) if np.isfinite(pixdim[i]) and pixdim[i] > 0 else 1.0
                    for i in (1, 2, 3))
    if sform_code > 0:
        affine = np.eye(4)
        affine[0, :] = srow[0:4]
        affine[1, :] = srow[4:8]
        affine[2, :] = srow[8:12]
    elif qform_code > 0:
        affine = _qform_affine(qform[0:3], qform[3:6], pixdim)
    else:
        affine = default_affine(spacing)
    return Volume(data, spacing, affine)


def _pack_header(dims, spacing, affine, datatype: int) -> bytes:
    dim = (3, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    pixdim = (1.0, spacing[0], spacing[1], spacing[2], 0.0, 0.0, 0.0, 0.0)
    return struct.pack(
        "<" + _HDR_FMT,
        HEADER_SIZE,
        b"", b"",
        0, 0, b"\x00\x00",
        *dim,
        0.0, 0.0, 0.0,
        0, datatype, _BITPIX[datatype],
        0,
        *pixdim,
        float(VOX_OFFSET),
        1.0, 0.0,           # scl_slope, scl_inter
        0, b"\x00\x00",
        0.0, 0.0, 0.0, 0.0,
        0, 0,
        b"", b"",
        0, 1,               # qform_code, sform_code
        0.0, 0.0, 0.0,
        0.0, 0.0, 0.0,
        *(float(v) for v in affine[0, :]),
        *(float(v) for v in affine[1, :]),
        *(float(v) for v in affine[2, :]),
        b"",
        b"n+1\x00",
    )


def save_nifti(obj: Volume | Mask3D) -> bytes:
    """Serialize a Volume (float64) or Mask3D (uint8) to .nii bytes."""
    if isinstance(obj, Mask3D):
        payload = obj.data.astype("<u1").tobytes(order="F")
        header = _pack_header(obj.dims, (1.0, 1.0, 1.0), obj.affine, datatype=2)
    elif isinstance(obj, Volume):
        payload = obj.data.astype("<f8").tobytes(order="F")
        header = _pack_header(obj.dims, obj.spacing, obj.affine, datatype=64)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return header + b"\x00\x00\x00\x00" + payload


def load_volume(path) -> Volume:
    return load_nifti(Path(path).read_bytes())


def load_mask(path) -> Mask3D:
    """Load a mask file; any nonzero voxel counts as set."""
    vol = load_nifti(Path(path).read_bytes())
    return Mask3D(vol.data != 0.0, vol.affine)


def _write(path, stream: bytes) -> None:
    path = Path(path)
    if path.suffix == ".gz":
        # fixed mtime keeps byte-identical outputs for identical inputs
        stream = gzip.compress(stream, mtime=0)
    path.write_bytes(stream)


def save_volume(vol: Volume, path) -> None:
    _write(path, save_nifti(vol))


def save_mask(mask: Mask3D, path) -> None:
    _write(path, save_nifti(mask))
