"""Deterministic spurious-correlation benchmark generator.

Each class has a core direction (a basis vector in the core block) and
each environment a spurious direction (a basis vector in the spurious
block). An ID sample is core + environment + Gaussian noise; the
correlation rate r fixes, exactly, how many of a class's samples get
the aligned environment. Two OOD flavors come out of the same geometry:

  sp_ood   - spurious direction present, core absent (the hard case);
  nsp_ood  - novel core and novel environment directions (classical OOD).

Group ids record the environment and exist only for evaluation; no
fitting code reads them. All outputs are unit-normalized and bit-stable
for a given seed via counter-based per-(stream, class) PRNG keys.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EmbeddingSet, normalize
from .exceptions import SpecError, TooFewSamples
from .rng import make_rng

_STREAM_TRAIN = 0
_STREAM_ID_TEST = 1
_STREAM_SP_OOD = 2
_STREAM_NSP_OOD = 3
_STREAM_LOWSHOT = 4


@dataclass(frozen=True)
class SyntheticSpec:
    class_count: int = 2
    core_dims: int = 4
    spurious_dims: int = 4
    correlation_rate: float = 0.95
    samples_per_class: int = 200
    noise_sigma: float = 0.15
    seed: int = 0

    # environments: one per class, environment j aligned with class j
    @property
    def environment_count(self) -> int:
        return self.class_count

    @property
    def dim(self) -> int:
        return self.core_dims + self.spurious_dims

    def validate(self) -> None:
        c, e = self.class_count, self.environment_count
        if c < 2:
            raise SpecError("class_count must be >= 2")
        if self.core_dims < c:
            raise SpecError(f"core_dims must be >= class_count ({c})")
        if self.spurious_dims < e:
            raise SpecError(f"spurious_dims must be >= environment_count ({e})")
        if not (1.0 / e) <= self.correlation_rate <= 1.0:
            raise SpecError(f"correlation_rate must be in [1/{e}, 1]")
        if self.samples_per_class < 2:
            raise SpecError("samples_per_class must be >= 2")
        if self.noise_sigma < 0:
            raise SpecError("noise_sigma must be >= 0")

    def to_dict(self) -> dict:
        return {
            "class_count": self.class_count,
            "core_dims": self.core_dims,
            "spurious_dims": self.spurious_dims,
            "correlation_rate": self.correlation_rate,
            "samples_per_class": self.samples_per_class,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticSpec":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


def _environment_plan(spec: SyntheticSpec, class_id: int) -> np.ndarray:
    """Deterministic per-sample environment ids for one class.

    Exactly round(r*n) samples take the aligned environment; the rest
    split as evenly as possible over the other environments, extras
    going to the lowest environment ids.
    """
    n = spec.samples_per_class
    majority = int(round(spec.correlation_rate * n))
    envs = [class_id] * majority
    others = [j for j in range(spec.environment_count) if j != class_id]
    rest = n - majority
    for i in range(rest):
        envs.append(others[i % len(others)])
    return np.array(sorted(envs[:majority]) + sorted(envs[majority:]), dtype=np.int32)


def _core_direction(spec: SyntheticSpec, class_id: int) -> np.ndarray:
    v = np.zeros(spec.dim)
    v[class_id] = 1.0
    return v


def _spurious_direction(spec: SyntheticSpec, env_id: int) -> np.ndarray:
    v = np.zeros(spec.dim)
    v[spec.core_dims + env_id] = 1.0
    return v


def _novel_core_direction(spec: SyntheticSpec) -> np.ndarray:
    v = np.zeros(spec.dim)
    if spec.core_dims > spec.class_count:
        v[spec.class_count] = 1.0
    else:
        # core block fully spanned by class directions; fall back to the
        # far corner of the block, distant from every class direction
        v[: spec.core_dims] = -1.0 / np.sqrt(spec.core_dims)
    return v


def _novel_spurious_direction(spec: SyntheticSpec) -> np.ndarray:
    v = np.zeros(spec.dim)
    if spec.spurious_dims > spec.environment_count:
        v[spec.core_dims + spec.environment_count] = 1.0
    else:
        v[spec.core_dims:] = -1.0 / np.sqrt(spec.spurious_dims)
    return v


def _noisy(base: np.ndarray, count: int, sigma: float, rng) -> np.ndarray:
    return base[None, :] + sigma * rng.standard_normal((count, base.size))


def generate(
    spec: SyntheticSpec,
) -> tuple[EmbeddingSet, EmbeddingSet, EmbeddingSet, EmbeddingSet]:
    """Build (train, id_test, sp_ood, nsp_ood), all unit-normalized."""
    spec.validate()
    train = _generate_id(spec, _STREAM_TRAIN)
    id_test = _generate_id(spec, _STREAM_ID_TEST)
    sp_ood = _generate_sp_ood(spec)
    nsp_ood = _generate_nsp_ood(spec)
    return train, id_test, sp_ood, nsp_ood


def _generate_id(spec: SyntheticSpec, stream: int) -> EmbeddingSet:
    feats, labels, groups = [], [], []
    for c in range(spec.class_count):
        rng = make_rng(spec.seed, stream, c)
        envs = _environment_plan(spec, c)
        base = np.stack(
            [_core_direction(spec, c) + _spurious_direction(spec, int(j)) for j in envs]
        )
        noisy = base + spec.noise_sigma * rng.standard_normal(base.shape)
        feats.append(noisy)
        labels.append(np.full(envs.size, c, dtype=np.int32))
        groups.append(envs)
    es = EmbeddingSet(
        features=np.concatenate(feats).astype(np.float32),
        labels=np.concatenate(labels),
        class_count=spec.class_count,
        group_ids=np.concatenate(groups),
    )
    return normalize(es)


def _generate_sp_ood(spec: SyntheticSpec) -> EmbeddingSet:
    # spurious attribute present, core feature absent; labels are dummies
    feats, groups = [], []
    for j in range(spec.environment_count):
        rng = make_rng(spec.seed, _STREAM_SP_OOD, j)
        feats.append(
            _noisy(_spurious_direction(spec, j), spec.samples_per_class, spec.noise_sigma, rng)
        )
        groups.append(np.full(spec.samples_per_class, j, dtype=np.int32))
    es = EmbeddingSet(
        features=np.concatenate(feats).astype(np.float32),
        labels=np.zeros(sum(f.shape[0] for f in feats), dtype=np.int32),
        class_count=spec.class_count,
        group_ids=np.concatenate(groups),
    )
    return normalize(es)


def _generate_nsp_ood(spec: SyntheticSpec) -> EmbeddingSet:
    rng = make_rng(spec.seed, _STREAM_NSP_OOD, 0)
    count = spec.class_count * spec.samples_per_class
    base = _novel_core_direction(spec) + _novel_spurious_direction(spec)
    es = EmbeddingSet(
        features=_noisy(base, count, spec.noise_sigma, rng).astype(np.float32),
        labels=np.zeros(count, dtype=np.int32),
        class_count=spec.class_count,
    )
    return normalize(es)


def subsample_lowshot(train: EmbeddingSet, m_per_minority: int, seed: int) -> EmbeddingSet:
    """Shrink the training set while preserving the correlation rate.

    Keeps m random samples per minority group and round(m*r/(1-r)) per
    majority group, where r is each class's empirical majority fraction
    (majority = the group whose environment equals the class label).
    """
    if train.group_ids is None:
        raise TooFewSamples("lowshot subsampling requires group annotations")
    if m_per_minority < 1:
        raise TooFewSamples("m_per_minority must be >= 1")
    keep: list[np.ndarray] = []
    for c in range(train.class_count):
        in_class = np.nonzero(train.labels == c)[0]
        envs = np.unique(train.group_ids[in_class])
        majority_n = int(np.sum(train.group_ids[in_class] == c))
        r = majority_n / in_class.size
        if r >= 1.0:
            raise TooFewSamples(f"class {c} has no minority group")
        m_major = int(round(m_per_minority * r / (1.0 - r)))
        for env in envs:
            members = in_class[train.group_ids[in_class] == env]
            want = m_major if env == c else m_per_minority
            if members.size < want:
                raise TooFewSamples(
                    f"class {c} group {int(env)} has {members.size} samples, need {want}"
                )
            rng = make_rng(seed, _STREAM_LOWSHOT, c, int(env))
            chosen = rng.choice(members, size=want, replace=False)
            keep.append(np.sort(chosen))
    idx = np.concatenate(keep)
    return EmbeddingSet(
        features=train.features[idx],
        labels=train.labels[idx],
        class_count=train.class_count,
        group_ids=train.group_ids[idx],
        normalized=train.normalized,
    )
