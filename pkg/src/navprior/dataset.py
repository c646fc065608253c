"""Path datasets: R2R-format I/O, validation, length statistics, env splits."""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from navprior.envgraph import EnvironmentGraph
from navprior.errors import ConfigError, DataError, FormatError

SPLITS = ("train", "val_seen", "val_unseen", "synthetic")

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, drop punctuation characters, split on whitespace."""
    return tuple(text.lower().translate(_PUNCT_TABLE).split())


def detokenize(tokens) -> str:
    return " ".join(tokens)


@dataclass(frozen=True)
class PathSample:
    """One trajectory: a node-id sequence plus optional instruction token lists."""

    path_id: int
    env_id: str
    path: tuple[str, ...]
    instructions: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        if len(self.path) < 2:
            raise DataError(f"path {self.path_id}: needs at least 2 viewpoints")

    @property
    def hops(self) -> int:
        return len(self.path) - 1


@dataclass
class PathDataset:
    """A list of path samples with a split tag.

    ``provenance`` preserves the heading/distance fields of loaded R2R
    records opaquely so that save() can round-trip them.
    """

    samples: tuple[PathSample, ...]
    split: str = "synthetic"
    provenance: dict[int, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        self.samples = tuple(self.samples)
        if self.split not in SPLITS:
            raise ConfigError(f"unknown split {self.split!r}, expected one of {SPLITS}")
        ids = [s.path_id for s in self.samples]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate path_ids in dataset: {dupes[:5]}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def env_ids(self) -> tuple[str, ...]:
        return tuple(sorted({s.env_id for s in self.samples}))


@dataclass(frozen=True)
class Violation:
    """One validation finding; a list of these is data, not an exception."""

    kind: str  # missing-environment | unknown-node | non-edge
    path_id: int
    detail: str


class LengthDistribution:
    """Probability mass function over path hop-counts."""

    def __init__(self, pmf: dict[int, float]):
        if not pmf:
            raise DataError("length distribution needs at least one hop-count")
        total = 0.0
        for hops, p in pmf.items():
            if hops < 1:
                raise DataError(f"hop-count must be >= 1, got {hops}")
            if p <= 0:
                raise DataError(f"probability for hop-count {hops} must be > 0, got {p}")
            total += p
        if abs(total - 1.0) > 1e-9:
            raise DataError(f"length distribution sums to {total!r}, expected 1")
        self.pmf: dict[int, float] = {int(h): float(pmf[h]) for h in sorted(pmf)}

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.pmf)

    def sample(self, u: float) -> int:
        """Inverse-CDF draw from a single uniform in [0, 1)."""
        acc = 0.0
        hops = None
        for hops, p in self.pmf.items():
            acc += p
            if u < acc:
                return hops
        return hops  # float slack at the top of the CDF

    def to_json(self) -> str:
        return json.dumps({"pmf": {str(h): p for h, p in self.pmf.items()}},
                          indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, data: bytes | str) -> "LengthDistribution":
        try:
            obj = json.loads(data)
            return cls({int(h): float(p) for h, p in obj["pmf"].items()})
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"length distribution file: {exc}") from exc

    def __eq__(self, other):
        return isinstance(other, LengthDistribution) and self.pmf == other.pmf

    def __repr__(self):
        return f"LengthDistribution({self.pmf})"


# -- R2R-format I/O -----------------------------------------------------

_R2R_FIELDS = ("path_id", "scan", "path", "heading", "distance", "instructions")


def load_r2r_json(data: bytes | str, split: str = "train") -> PathDataset:
    """Parse an R2R-format JSON array into a dataset."""
    try:
        records = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"R2R file: invalid JSON ({exc})") from exc
    if not isinstance(records, list):
        raise FormatError("R2R file: expected a JSON array")

    samples = []
    provenance = {}
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise FormatError(f"record {i}: expected an object")
        missing = [f for f in _R2R_FIELDS if f not in rec]
        if missing:
            raise FormatError(f"record {i}: missing field(s) {missing}")
        path = tuple(str(v) for v in rec["path"])
        if len(path) < 2:
            raise FormatError(f"record {i}: path has {len(path)} viewpoints, needs >= 2")
        pid = int(rec["path_id"])
        samples.append(PathSample(
            path_id=pid,
            env_id=str(rec["scan"]),
            path=path,
            instructions=tuple(tokenize(s) for s in rec["instructions"]),
        ))
        provenance[pid] = (float(rec["heading"]), float(rec["distance"]))
    return PathDataset(tuple(samples), split=split, provenance=provenance)


def save_r2r_json(ds: PathDataset) -> str:
    """Serialize to R2R format; instructions become space-joined strings."""
    records = []
    for s in ds.samples:
        heading, distance = ds.provenance.get(s.path_id, (0.0, 0.0))
        records.append({
            "path_id": s.path_id,
            "scan": s.env_id,
            "path": list(s.path),
            "heading": heading,
            "distance": distance,
            "instructions": [detokenize(toks) for toks in s.instructions],
        })
    return json.dumps(records, indent=2, sort_keys=True)


def load_dataset_path(path, split: str | None = None) -> PathDataset:
    """Load a single R2R file, or merge every R2R_<split>.json in a directory."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("R2R_*.json"))
        if not files:
            raise DataError(f"no R2R_<split>.json files in {p}")
        samples: list[PathSample] = []
        provenance: dict[int, tuple[float, float]] = {}
        for f in files:
            name_split = f.stem[len("R2R_"):]
            part = load_r2r_json(f.read_bytes(),
                                 split=name_split if name_split in SPLITS else "train")
            samples.extend(part.samples)
            provenance.update(part.provenance)
        return PathDataset(tuple(samples), split=split or "train", provenance=provenance)
    if not p.is_file():
        raise DataError(f"dataset file not found: {p}")
    return load_r2r_json(p.read_bytes(), split=split or "train")


# -- validation and statistics -------------------------------------------


def validate(ds: PathDataset, graphs: dict[str, EnvironmentGraph]) -> list[Violation]:
    """Check every sample against its environment graph."""
    violations = []
    for s in ds.samples:
        g = graphs.get(s.env_id)
        if g is None:
            violations.append(Violation("missing-environment", s.path_id,
                                        f"environment {s.env_id!r} not provided"))
            continue
        bad_nodes = [nid for nid in s.path if nid not in g]
        if bad_nodes:
            violations.append(Violation("unknown-node", s.path_id,
                                        f"nodes {bad_nodes} not in {s.env_id!r}"))
            continue
        for u, v in zip(s.path, s.path[1:]):
            if not g.has_edge(u, v):
                violations.append(Violation("non-edge", s.path_id,
                                            f"({u!r}, {v!r}) is not an edge"))
    return violations


def empirical_length_distribution(ds: PathDataset) -> LengthDistribution:
    """PMF of hop-counts observed in the dataset."""
    if not ds.samples:
        raise DataError("cannot build a length distribution from an empty dataset")
    counts: dict[int, int] = {}
    for s in ds.samples:
        counts[s.hops] = counts.get(s.hops, 0) + 1
    n = len(ds.samples)
    return LengthDistribution({h: c / n for h, c in counts.items()})


def split_environments(env_ids, fraction_seen: float,
                       rng: np.random.Generator) -> tuple[set[str], set[str]]:
    """Disjoint seen/unseen partition; |seen| = round(fraction*N) clamped to [1, N-1]."""
    ids = sorted(env_ids)
    n = len(ids)
    if n < 2:
        raise ConfigError(f"need at least 2 environments to split, got {n}")
    if not 0.0 < fraction_seen < 1.0:
        raise ConfigError(f"fraction_seen must be in (0, 1), got {fraction_seen}")
    n_seen = int(math.floor(fraction_seen * n + 0.5))
    n_seen = min(max(n_seen, 1), n - 1)
    order = rng.permutation(n)
    seen = {ids[i] for i in order[:n_seen]}
    unseen = set(ids) - seen
    return seen, unseen
