"""Synthetic ONH scans: labelled volumes, boundary surfaces and load fields."""

from .anatomy import generate_phantom
from .cohort import (
    CohortSample,
    PhantomCohort,
    calibrate_amplitude,
    cohort_from_manifest,
    generate_cohort,
    reference_params,
    sample_id,
)
from .coupling import PhantomCoupling, load_coupling, parse_coupling
from .displacement import generate_displacement, rigid_translation_field
from .io import (
    read_displacement,
    read_params,
    read_surfaces_csv,
    read_volume,
    write_displacement,
    write_params,
    write_surfaces_csv,
    write_volume,
)
from .sections import central_section
from .types import (
    LABEL_NAMES,
    DisplacementField,
    PhantomError,
    PhantomParams,
    PhantomTruth,
    SegmentedVolume,
    VolumeGrid,
)

__all__ = [
    "CohortSample",
    "DisplacementField",
    "LABEL_NAMES",
    "PhantomCohort",
    "PhantomCoupling",
    "PhantomError",
    "PhantomParams",
    "PhantomTruth",
    "SegmentedVolume",
    "VolumeGrid",
    "calibrate_amplitude",
    "central_section",
    "cohort_from_manifest",
    "generate_cohort",
    "generate_displacement",
    "generate_phantom",
    "load_coupling",
    "parse_coupling",
    "read_displacement",
    "read_params",
    "read_surfaces_csv",
    "read_volume",
    "reference_params",
    "rigid_translation_field",
    "sample_id",
    "write_displacement",
    "write_params",
    "write_surfaces_csv",
    "write_volume",
]
