"""Writer for the EMB1 embedding container.

Layout (little-endian): magic "EMB1", u32 version=1, u32 N, u32 D,
u32 C, u8 has_labels, u8 has_groups, two zero pad bytes (24-byte
header), then N*D float32 features row-major, N int32 labels, and
optionally N int32 group ids.
"""

import struct

import numpy as np

_HEADER = struct.Struct("<4sIIIIBBxx")
MAGIC = b"EMB1"
VERSION = 1


def write_emb1(path, features, labels, class_count, group_ids=None):
    features = np.ascontiguousarray(features, dtype=np.float32)
    labels = np.ascontiguousarray(labels, dtype=np.int32)
    if features.ndim != 2:
        raise ValueError("features must be 2-D")
    n, d = features.shape
    if labels.shape != (n,):
        raise ValueError("labels length must match feature rows")
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise ValueError("labels out of range for class_count")
    if group_ids is not None:
        group_ids = np.ascontiguousarray(group_ids, dtype=np.int32)
        if group_ids.shape != (n,):
            raise ValueError("group_ids length must match feature rows")

    header = _HEADER.pack(MAGIC, VERSION, n, d, class_count, 1,
                          0 if group_ids is None else 1)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(features.tobytes())
        fh.write(labels.tobytes())
        if group_ids is not None:
            fh.write(group_ids.tobytes())
