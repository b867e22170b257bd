"""Program database and cluster-based reference sampling."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np


class EmptyDatabaseError(LookupError):
    pass


class InfeasibleError(ValueError):
    pass


@dataclass
class ProgramEntry:
    id: int
    source: str
    score: float
    valid: bool = True
    parent_ids: list = field(default_factory=list)
    created_round: int = 0
    process_id: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ProgramEntry":
        return cls(int(d["id"]), d["source"], float(d["score"]), bool(d["valid"]),
                   [int(p) for p in d.get("parent_ids", [])], int(d.get("created_round", 0)),
                   int(d.get("process_id", 0)))


@dataclass
class SamplerConfig:
    k_cluster: int = 10
    k_ref: int = 2
    p0: float = 0.5

    def __post_init__(self):
        if self.k_cluster < 2:
            raise ValueError("k_cluster must be >= 2")
        if not 0 < self.p0 < 1:
            raise ValueError("p0 must lie in (0, 1)")
        if self.k_ref < 0:
            raise ValueError("k_ref must be >= 0")


class ProgramDatabase:
    """Append-only store of scored programs.

    Invalid entries are kept for audit but are never sampled.  With a
    ``path``, every insert is appended to a JSON-lines file.
    """

    def __init__(self, path: Optional[str | os.PathLike] = None):
        self.entries: list[ProgramEntry] = []
        self.path = path

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def next_id(self) -> int:
        return self.entries[-1].id + 1 if self.entries else 0

    def insert(self, entry: ProgramEntry) -> ProgramEntry:
        self.entries.append(entry)
        if self.path is not None:
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(entry.to_json() + "\n")
            except OSError as exc:
                raise OSError(f"cannot append to database file {self.path}: {exc}") from exc
        return entry

    def add(self, source: str, score: Optional[float], **kw) -> ProgramEntry:
        valid = score is not None
        return self.insert(ProgramEntry(self.next_id(), source,
                                        float(score) if valid else float("nan"), valid, **kw))

    @property
    def sampleable(self) -> list[ProgramEntry]:
        return [e for e in self.entries if e.valid]

    @property
    def sampleable_count(self) -> int:
        return sum(1 for e in self.entries if e.valid)

    def best(self) -> Optional[ProgramEntry]:
        best = None
        for e in self.entries:
            if e.valid and (best is None or e.score > best.score):
                best = e
        return best

    def persist(self, path: str | os.PathLike):
        try:
            with open(path, "w", encoding="utf-8") as fh:
                for e in self.entries:
                    fh.write(e.to_json() + "\n")
        except OSError as exc:
            raise OSError(f"cannot write database file {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ProgramDatabase":
        db = cls()
        try:
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        db.entries.append(ProgramEntry.from_dict(json.loads(line)))
                    except (ValueError, KeyError) as exc:
                        raise ValueError(f"{path}:{lineno}: bad entry: {exc}") from exc
        except OSError as exc:
            raise OSError(f"cannot read database file {path}: {exc}") from exc
        return db


# -- 1-D k-means ---------------------------------------------------------------

def kmeans_1d(x, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 100):
    """Lloyd's algorithm on scalars with k-means++ seeding.

    Returns ``(labels, centers, inertia)`` for the best of ``n_init`` seeded
    restarts.  Labels index ``centers``; empty clusters are dropped.
    """
    x = np.asarray(x, dtype=float)
    if k < 1 or k > len(x):
        raise ValueError(f"cannot form {k} clusters from {len(x)} points")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        centers = _kmeanspp(x, k, rng)
        for _ in range(max_iter):
            labels = np.abs(x[:, None] - centers[None, :]).argmin(axis=1)
            new = centers.copy()
            for j in range(k):
                members = x[labels == j]
                if len(members):
                    new[j] = members.mean()
            if np.array_equal(new, centers):
                break
            centers = new
        labels = np.abs(x[:, None] - centers[None, :]).argmin(axis=1)
        inertia = float(((x - centers[labels]) ** 2).sum())
        if best is None or inertia < best[2] - 1e-12:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    used = np.unique(labels)
    remap = {int(old): new for new, old in enumerate(used)}
    return np.array([remap[int(l)] for l in labels]), centers[used], inertia


def _kmeanspp(x, k, rng):
    centers = [x[rng.integers(len(x))]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total == 0:
            centers.append(x[rng.integers(len(x))])
        else:
            centers.append(x[rng.choice(len(x), p=d2 / total)])
    return np.array(centers, dtype=float)


# -- partition and sampling ------------------------------------------------------

def partition(db: ProgramDatabase | Iterable[ProgramEntry], k_cluster: int = 10,
              seed: int = 0) -> list[list[int]]:
    """Cluster valid entry ids by score, best cluster first.

    Entries sharing the top score form cluster 0.  With fewer than
    ``k_cluster`` distinct scores each score is its own cluster; otherwise
    the remaining distinct scores (one point each) go through k-means with
    ``k_cluster - 1`` centers.
    """
    by_score: dict[float, list[int]] = {}
    for e in db:
        if e.valid:
            by_score.setdefault(e.score, []).append(e.id)
    if not by_score:
        raise EmptyDatabaseError("no valid programs to partition")
    ordered = sorted(by_score.items(), key=lambda kv: -kv[0])
    if len(ordered) < k_cluster:
        return [ids for _, ids in ordered]
    (_, top_ids), rest = ordered[0], ordered[1:]
    scores = [s for s, _ in rest]
    labels, _, _ = kmeans_1d(scores, min(k_cluster - 1, len(scores)), seed=seed)
    groups: dict[int, list] = {}
    for (score, ids), lab in zip(rest, labels):
        groups.setdefault(int(lab), []).append((score, ids))
    clusters = sorted(groups.values(), key=lambda g: -max(s for s, _ in g))
    return [top_ids] + [[i for _, ids in g for i in ids] for g in clusters]


def cluster_probs(k: int, p0: float = 0.5, tol: float = 1e-12) -> np.ndarray:
    """``p[i] = p0 * r**i`` with ``r`` found by bisection so that sum(p) = 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return np.array([1.0])
    if not 0 < p0 < 1:
        raise InfeasibleError(f"no ratio r > 0 normalizes k={k} clusters with p0={p0}")

    def excess(r):
        return p0 * sum(r ** i for i in range(k)) - 1.0

    lo, hi = 0.0, 1.0
    while excess(hi) < 0:
        hi *= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    r = 0.5 * (lo + hi)
    p = p0 * r ** np.arange(k)
    if abs(p.sum() - 1.0) > tol:
        raise InfeasibleError(f"bisection residual {p.sum() - 1.0:.3e} above {tol}")
    return p


def sample_refs(db: ProgramDatabase, cfg: SamplerConfig, rng: np.random.Generator,
                seed: int = 0) -> list[ProgramEntry]:
    """Draw ``k_ref`` clusters i.i.d. by index-decaying probability, then one
    entry uniformly from each.  Repeats are possible."""
    clusters = partition(db, cfg.k_cluster, seed=seed)
    p = cluster_probs(len(clusters), cfg.p0)
    p = p / p.sum()
    by_id = {e.id: e for e in db.entries}
    picks = rng.choice(len(clusters), size=cfg.k_ref, p=p)
    return [by_id[int(rng.choice(clusters[int(c)]))] for c in picks]
