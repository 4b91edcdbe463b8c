"""Batch extraction of penultimate-layer embeddings to EMB1."""

from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image

from .backbones import load_backbone, preprocessing
from .emb1 import write_emb1
from .manifest import load_manifest


@dataclass(frozen=True)
class ExtractionJob:
    backbone: str
    manifest_path: str
    output_path: str
    batch_size: int = 16
    device: str = "cpu"
    pretrained: bool = False

    def validate(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def _load_batch(paths, transform):
    tensors = []
    for p in paths:
        with Image.open(p) as img:
            tensors.append(transform(img.convert("RGB")))
    return torch.stack(tensors)


def extract(job: ExtractionJob):
    """Run the job and return (n, d) written.

    Row order equals manifest order. Features are un-normalized float32;
    downstream consumers decide whether to project to the unit sphere.
    """
    job.validate()
    manifest = load_manifest(job.manifest_path)
    model, width = load_backbone(job.backbone, pretrained=job.pretrained,
                                 device=job.device)
    transform = preprocessing()

    chunks = []
    with torch.no_grad():
        for start in range(0, len(manifest), job.batch_size):
            paths = manifest.paths[start : start + job.batch_size]
            batch = _load_batch(paths, transform).to(job.device)
            feats = model(batch)
            if feats.ndim != 2 or feats.shape[1] != width:
                raise RuntimeError(
                    f"backbone produced shape {tuple(feats.shape)}, "
                    f"expected (*, {width})"
                )
            chunks.append(feats.cpu().numpy().astype(np.float32))
    features = np.concatenate(chunks, axis=0)

    write_emb1(job.output_path, features, np.asarray(manifest.labels),
               manifest.class_count,
               None if manifest.groups is None else np.asarray(manifest.groups))
    return features.shape
