"""Image manifest parsing.

A manifest is a CSV with header ``path,label`` or ``path,label,group``.
Paths are resolved relative to the manifest file's directory unless
absolute. Labels must be contiguous integers covering [0, C).
"""

import csv
import os
from dataclasses import dataclass


class ManifestError(Exception):
    pass


@dataclass(frozen=True)
class Manifest:
    paths: list
    labels: list
    groups: list | None

    @property
    def class_count(self):
        return max(self.labels) + 1

    def __len__(self):
        return len(self.paths)


def load_manifest(path):
    base = os.path.dirname(os.path.abspath(path))
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError("empty manifest") from None
        header = [h.strip() for h in header]
        if header == ["path", "label"]:
            has_groups = False
        elif header == ["path", "label", "group"]:
            has_groups = True
        else:
            raise ManifestError(
                "manifest header must be 'path,label' or 'path,label,group'"
            )
        paths, labels, groups = [], [], [] if has_groups else None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ManifestError(f"row {lineno}: expected {len(header)} fields")
            img = row[0].strip()
            if not os.path.isabs(img):
                img = os.path.join(base, img)
            try:
                labels.append(int(row[1]))
            except ValueError:
                raise ManifestError(f"row {lineno}: label is not an integer") from None
            if has_groups:
                try:
                    groups.append(int(row[2]))
                except ValueError:
                    raise ManifestError(
                        f"row {lineno}: group is not an integer"
                    ) from None
            paths.append(img)

    if not paths:
        raise ManifestError("manifest has no rows")
    seen = set(labels)
    if min(labels) < 0 or seen != set(range(max(labels) + 1)):
        raise ManifestError("labels must be contiguous integers covering [0, C)")
    for i, img in enumerate(paths):
        if not os.path.isfile(img):
            raise ManifestError(f"row {i + 2}: missing image file {img}")
    return Manifest(paths=paths, labels=labels, groups=groups)
