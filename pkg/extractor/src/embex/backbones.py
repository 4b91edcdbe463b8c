"""Backbone registry.

Each entry pins a torchvision constructor, its penultimate-layer width,
and the canonical eval-time preprocessing (resize, center crop,
per-channel normalization). Features are taken after global pooling and
before the classification head, which is replaced with identity.

Weights default to a seeded random initialization so extraction works
offline and repeats byte-identically; pass ``pretrained=True`` to fetch
the published torchvision weights instead.
"""

import hashlib

import torch
from torch import nn
from torchvision import models, transforms

_IMAGENET_MEAN = [0.485, 0.456, 0.406]
_IMAGENET_STD = [0.229, 0.224, 0.225]


class BackboneError(Exception):
    pass


def _strip_fc(model):
    model.fc = nn.Identity()
    return model


def _strip_heads(model):
    model.heads = nn.Identity()
    return model


def _strip_classifier(model):
    model.classifier = nn.Identity()
    return model


# name -> (constructor, weights enum attr, head stripper, embedding width)
_REGISTRY = {
    "resnet18": (models.resnet18, "ResNet18_Weights", _strip_fc, 512),
    "resnet50": (models.resnet50, "ResNet50_Weights", _strip_fc, 2048),
    "vit_b_16": (models.vit_b_16, "ViT_B_16_Weights", _strip_heads, 768),
    "mobilenet_v3_small": (
        models.mobilenet_v3_small, "MobileNet_V3_Small_Weights",
        _strip_classifier, 576,
    ),
}


def available_backbones():
    return sorted(_REGISTRY)


def _seed_for(name):
    digest = hashlib.sha256(name.encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**31)


def preprocessing():
    return transforms.Compose([
        transforms.Resize(256),
        transforms.CenterCrop(224),
        transforms.ToTensor(),
        transforms.Normalize(mean=_IMAGENET_MEAN, std=_IMAGENET_STD),
    ])


def load_backbone(name, pretrained=False, device="cpu"):
    """Return (model, embedding_width). Model is headless and in eval mode."""
    if name not in _REGISTRY:
        raise BackboneError(
            f"unknown backbone {name!r}; available: {', '.join(available_backbones())}"
        )
    ctor, weights_attr, strip, width = _REGISTRY[name]
    if pretrained:
        weights = getattr(models, weights_attr).DEFAULT
        try:
            model = ctor(weights=weights)
        except Exception as exc:
            raise BackboneError(f"cannot load pretrained weights: {exc}") from exc
    else:
        # offline fallback: random weights from a seed derived from the
        # backbone name, so repeated runs produce identical embeddings
        torch.manual_seed(_seed_for(name))
        model = ctor(weights=None)
    model = strip(model)
    model.eval()
    try:
        model.to(device)
    except RuntimeError as exc:
        raise BackboneError(f"device {device!r} unavailable: {exc}") from exc
    return model, width
