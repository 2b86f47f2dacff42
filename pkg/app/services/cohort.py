"""Phantom cohorts on disk: building them from a config and reading them back."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator

from app.config.settings import PhantomConfig, StrainConfig
from app.pipelines.phantom import (
    CohortSample,
    PhantomCohort,
    PhantomError,
    VolumeGrid,
    generate_cohort,
    load_coupling,
    read_displacement,
    read_params,
    read_surfaces_csv,
    read_volume,
    write_displacement,
    write_params,
    write_surfaces_csv,
    write_volume,
)
from app.telemetry import increment_phantoms
from app.views.artifacts import CohortIndex

from .storage import ArtifactStore, StorageError, read_json

logger = logging.getLogger(__name__)

COHORT_INDEX = "cohort.json"


def build_cohort(phantom: PhantomConfig, strain: StrainConfig) -> PhantomCohort:
    """Lazy cohort described by the phantom and strain sections."""

    return generate_cohort(
        phantom.cohort_size,
        phantom.balance_target,
        phantom.seed,
        grid=VolumeGrid.from_config(phantom),
        coupling=load_coupling(phantom.coupling_file),
        threshold=strain.threshold,
        calibrate=phantom.calibrate_balance,
        formula=strain.formula,
        bmo_points=phantom.bmo_points,
    )


def _materialize(cohort: PhantomCohort, index: int) -> CohortSample:
    return cohort[index]


def iter_samples(cohort: PhantomCohort, jobs: int = 1) -> Iterator[CohortSample]:
    """Phantoms in cohort order; ``jobs > 1`` builds them in worker processes."""

    if jobs <= 1:
        yield from cohort
        return
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        yield from executor.map(
            _materialize, [cohort] * len(cohort), range(len(cohort)), chunksize=1
        )


def write_sample(sample: CohortSample, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    write_volume(sample.volume, directory / "volume")
    write_displacement(sample.field, directory / "displacement")
    write_surfaces_csv(sample.surfaces, directory / "surfaces.csv")
    write_params(sample.params, directory / "params.json")


def write_cohort(
    cohort: PhantomCohort,
    store: ArtifactStore,
    relative: str = "phantoms",
    *,
    jobs: int = 1,
) -> Path:
    """``cohort.json`` plus one directory of files per phantom."""

    root = store.directory(relative)
    store.write_json(Path(relative) / COHORT_INDEX, cohort.manifest())
    for sample in iter_samples(cohort, jobs):
        try:
            write_sample(sample, root / sample.id)
        except OSError as exc:
            raise StorageError(f"cannot write phantom {sample.id}: {exc.strerror}") from exc
        increment_phantoms()
        logger.debug("Phantom %s written", sample.id)
    logger.info("Cohort of %d phantoms written to %s", len(cohort), root)
    return root


@dataclass(frozen=True)
class CohortFiles:
    """Read access to a directory written by :func:`write_cohort`."""

    root: Path

    @cached_property
    def index(self) -> CohortIndex:
        return read_json(self.root / COHORT_INDEX, CohortIndex)

    @property
    def ids(self) -> list[str]:
        return [entry.id for entry in self.index.entries]

    def sample(self, sample_id: str) -> CohortSample:
        seeds = {entry.id: entry.seed for entry in self.index.entries}
        if sample_id not in seeds:
            raise StorageError(f"{self.root}: cohort has no phantom {sample_id}")
        directory = self.root / sample_id
        try:
            volume = read_volume(directory / "volume")
            return CohortSample(
                sample_id,
                seeds[sample_id],
                read_params(directory / "params.json"),
                volume,
                read_surfaces_csv(directory / "surfaces.csv"),
                read_displacement(directory / "displacement", volume),
            )
        except PhantomError as exc:
            raise StorageError(f"{directory}: {exc}") from exc

    def __len__(self) -> int:
        return len(self.index.entries)

    def __getitem__(self, index: int) -> CohortSample:
        return self.sample(self.ids[index])

    def __iter__(self) -> Iterator[CohortSample]:
        for sample_id in self.ids:
            yield self.sample(sample_id)


__all__ = [
    "COHORT_INDEX",
    "CohortFiles",
    "build_cohort",
    "iter_samples",
    "write_cohort",
    "write_sample",
]
