"""Occurrence datasets, k-ton tabulation, growth curves, fold plans.

The canonical on-disk format is a TSV of ``pop<TAB>sample<TAB>variant``
triples (pop in {1, 2}); a two-field line declares a sample with no
variants, so simulated datasets round-trip exactly.  Variant ids live in
a registry shared by every dataset derived from the same source, which
is how pilot/follow-up splits are kept comparable.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, InsufficientDataError
from .model import CountPair

__all__ = [
    "VariantDataset",
    "KtonTable",
    "GrowthCurve",
    "FoldPlan",
    "load_tsv",
    "save_tsv",
    "count_new_ktons",
    "count_new_total",
    "growth_curve",
    "make_folds",
    "fit_power_law_slope",
]


class VariantDataset:
    """Presence/absence data for two populations over a shared variant registry."""

    def __init__(self, registry_token=None):
        self.samples = {1: [], 2: []}
        self.variants = {}  # (pop, sample_id) -> set of variant ids
        self.registry = set()
        # Identity token marking which source this dataset (or its parent)
        # came from; subsets inherit it.
        self.registry_token = registry_token if registry_token is not None else object()

    def add_sample(self, pop, sample_id, variant_ids=()):
        if pop not in (1, 2):
            raise DataFormatError(f"population must be 1 or 2, got {pop!r}")
        key = (pop, sample_id)
        if key not in self.variants:
            self.samples[pop].append(sample_id)
            self.variants[key] = set()
        self.variants[key].update(variant_ids)
        self.registry.update(variant_ids)

    def n_samples(self):
        return CountPair(len(self.samples[1]), len(self.samples[2]))

    def sample_variants(self, pop, sample_id):
        return self.variants[(pop, sample_id)]

    def support(self):
        """All variant ids present in at least one sample."""
        out = set()
        for s in self.variants.values():
            out |= s
        return out

    def subset(self, sample_ids_by_pop):
        """Dataset restricted to the given per-population sample ids,
        sharing this dataset's registry."""
        out = VariantDataset(registry_token=self.registry_token)
        out.registry = self.registry
        for pop in (1, 2):
            for sid in sample_ids_by_pop.get(pop, ()):
                if (pop, sid) not in self.variants:
                    raise ValueError(f"unknown sample {(pop, sid)!r}")
                out.samples[pop].append(sid)
                out.variants[(pop, sid)] = self.variants[(pop, sid)]
        return out

    def __eq__(self, other):
        if not isinstance(other, VariantDataset):
            return NotImplemented
        return self.samples == other.samples and self.variants == other.variants


@dataclass
class KtonTable:
    """Counts (or predicted means) on the (k1, k2) grid 0..v.

    Cell (0, 0) is zero by convention.
    """

    v: int
    cells: np.ndarray = None

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.zeros((self.v + 1, self.v + 1))
        self.cells = np.asarray(self.cells, dtype=float)
        if self.cells.shape != (self.v + 1, self.v + 1):
            raise ValueError("cells must be a (v+1, v+1) grid")
        self.cells[0, 0] = 0.0

    def write_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["k1", "k2", "value"])
        for k1 in range(self.v + 1):
            for k2 in range(self.v + 1):
                writer.writerow([k1, k2, repr(self.cells[k1, k2])])


@dataclass
class GrowthCurve:
    """Cumulative distinct-variant counts along an ordered sample sequence."""

    counts: np.ndarray
    order: list = field(default_factory=list)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)

    def __len__(self):
        return self.counts.size

    def write_csv(self, fh):
        writer = csv.writer(fh)
        writer.writerow(["index", "count"])
        for i, c in enumerate(self.counts, start=1):
            writer.writerow([i, repr(float(c))])


@dataclass
class FoldPlan:
    """Per-population partition into n_folds blocks; fold f's pilot is
    block f from each population."""

    n_folds: int
    blocks: dict  # pop -> list of lists of sample ids
    seed: int

    def pilot_ids(self, fold):
        return {pop: list(self.blocks[pop][fold]) for pop in (1, 2)}

    def followup_ids(self, fold):
        out = {}
        for pop in (1, 2):
            ids = []
            for f, block in enumerate(self.blocks[pop]):
                if f != fold:
                    ids.extend(block)
            out[pop] = ids
        return out

    def to_json(self):
        return json.dumps({
            "n_folds": self.n_folds,
            "seed": self.seed,
            "blocks": {str(pop): self.blocks[pop] for pop in (1, 2)},
        }, default=str)


def load_tsv(path):
    """Read a dataset from ``pop<TAB>sample<TAB>variant`` lines.

    Comment lines starting with '#' are ignored; a two-field line
    declares an empty sample; duplicate triples collapse.
    """
    ds = VariantDataset()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise DataFormatError("expected 2 or 3 tab-separated fields", lineno)
            try:
                pop = int(fields[0])
            except ValueError:
                raise DataFormatError(f"population must be an integer, got {fields[0]!r}",
                                      lineno) from None
            if pop not in (1, 2):
                raise DataFormatError(f"population must be 1 or 2, got {pop}", lineno)
            if len(fields) == 2 or fields[2] == "":
                ds.add_sample(pop, fields[1])
            else:
                ds.add_sample(pop, fields[1], [fields[2]])
    return ds


def save_tsv(ds, path_or_fh):
    """Write a dataset in the canonical TSV format (sorted variant ids
    within a sample, samples in dataset order)."""
    def _write(fh):
        for pop in (1, 2):
            for sid in ds.samples[pop]:
                vs = ds.variants[(pop, sid)]
                if not vs:
                    fh.write(f"{pop}\t{sid}\n")
                for vid in sorted(vs, key=str):
                    fh.write(f"{pop}\t{sid}\t{vid}\n")

    if hasattr(path_or_fh, "write"):
        _write(path_or_fh)
    else:
        with open(path_or_fh, "w") as fh:
            _write(fh)


def _check_registry(a, b):
    if a.registry_token is not b.registry_token:
        raise ValueError("datasets do not share a variant-id registry; "
                         "derive both from the same source dataset")


def _new_variant_counts(pilot, followup):
    """Per-population follow-up occurrence counts of variants absent from
    every pilot sample."""
    _check_registry(pilot, followup)
    seen = pilot.support()
    counts = {}
    for (pop, _sid), vs in followup.variants.items():
        for vid in vs:
            if vid in seen:
                continue
            if vid not in counts:
                counts[vid] = [0, 0]
            counts[vid][pop - 1] += 1
    return counts


def count_new_ktons(pilot, followup, v):
    """Tabulate new variants by their (k1, k2) follow-up occurrence counts.

    Variants with either count above v fall outside the table.
    """
    if v < 1:
        raise ValueError("v must be at least 1")
    table = KtonTable(v)
    for k1, k2 in _new_variant_counts(pilot, followup).values():
        if k1 <= v and k2 <= v:
            table.cells[k1, k2] += 1
    table.cells[0, 0] = 0.0
    return table


def count_new_total(pilot, followup):
    """Number of variants absent from the pilot and present in the follow-up."""
    return len(_new_variant_counts(pilot, followup))


def growth_curve(data, order):
    """Cumulative number of distinct variants along ``order``, a sequence
    of (pop, sample_id) pairs."""
    seen = set()
    counts = []
    for pop, sid in order:
        if (pop, sid) not in data.variants:
            raise ValueError(f"unknown sample {(pop, sid)!r}")
        seen |= data.variants[(pop, sid)]
        counts.append(len(seen))
    return GrowthCurve(np.array(counts, dtype=float), list(order))


def make_folds(data, n_folds, seed):
    """Seeded uniform partition of each population into n_folds blocks
    (sizes within one of each other)."""
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    rng = np.random.default_rng(seed)
    blocks = {}
    for pop in (1, 2):
        ids = list(data.samples[pop])
        if len(ids) < n_folds:
            raise InsufficientDataError(
                f"population {pop} has {len(ids)} samples; need >= {n_folds}")
        perm = rng.permutation(len(ids))
        blocks[pop] = [[] for _ in range(n_folds)]
        for pos, idx in enumerate(perm):
            blocks[pop][pos % n_folds].append(ids[idx])
    return FoldPlan(n_folds, blocks, seed)


def fit_power_law_slope(curve):
    """Least-squares slope of log(count) against log(index) over the
    final third of the curve."""
    counts = np.asarray(curve.counts if isinstance(curve, GrowthCurve) else curve,
                        dtype=float)
    n = counts.size
    if n < 6:
        raise ValueError("curve must have at least 6 points")
    start = (2 * n) // 3
    window = counts[start:]
    if np.any(window <= 0):
        raise ValueError("counts in the final third must be positive")
    x = np.log(np.arange(start + 1, n + 1, dtype=float))
    y = np.log(window)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
