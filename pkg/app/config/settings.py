from typing import Literal, Optional

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

PAPER = {"source": "paper"}

FULL_RESOLUTION_DIMS: tuple[int, int, int] = (97, 384, 496)
FULL_RESOLUTION_SPACING_MM: tuple[float, float, float] = (0.035, 0.0115, 0.00387)


def _section_config(prefix: str) -> SettingsConfigDict:
    """Shared settings behaviour for every experiment section."""

    return SettingsConfigDict(
        env_prefix=prefix,
        case_sensitive=False,
        extra="forbid",
    )


class PhantomConfig(BaseSettings):
    """Synthetic cohort geometry and size."""

    dims: tuple[int, int, int] = Field(
        default=(33, 128, 160),
        description="Voxel grid as (B-scans, A-scans per B-scan, pixels per A-scan).",
    )
    extent_mm: tuple[float, float, float] = Field(
        default=(
            FULL_RESOLUTION_DIMS[0] * FULL_RESOLUTION_SPACING_MM[0],
            FULL_RESOLUTION_DIMS[1] * FULL_RESOLUTION_SPACING_MM[1],
            FULL_RESOLUTION_DIMS[2] * FULL_RESOLUTION_SPACING_MM[2],
        ),
        description="Physical size of the scan volume; spacing is extent / dims.",
        json_schema_extra=PAPER,
    )
    cohort_size: int = Field(default=336, ge=2, json_schema_extra=PAPER)
    seed: int = Field(default=0, ge=0)
    balance_target: float = Field(default=0.5, gt=0.0, lt=1.0)
    calibrate_balance: bool = True
    bmo_points: int = Field(default=48, ge=3)
    coupling_file: str = "phantom/coupling.json"

    model_config = _section_config("PHANTOM_")

    @field_validator("dims")
    @classmethod
    def _positive_dims(cls, value: tuple[int, int, int]) -> tuple[int, int, int]:
        if any(size < 5 for size in value):
            raise ValueError("every phantom dimension needs at least 5 voxels")
        return value

    @field_validator("extent_mm")
    @classmethod
    def _positive_extent(
        cls, value: tuple[float, float, float]
    ) -> tuple[float, float, float]:
        if any(size <= 0 for size in value):
            raise ValueError("extent must be positive along every axis")
        return value

    @property
    def spacing_mm(self) -> tuple[float, float, float]:
        """Voxel spacing along (B-scan, A-scan, depth)."""

        return (
            self.extent_mm[0] / self.dims[0],
            self.extent_mm[1] / self.dims[1],
            self.extent_mm[2] / self.dims[2],
        )

    def at_full_resolution(self) -> "PhantomConfig":
        """Return a copy using the clinical 97×384×496 raster."""

        return self.model_copy(update={"dims": FULL_RESOLUTION_DIMS})


class StrainConfig(BaseSettings):
    """Strain labelling rule."""

    threshold: float = Field(default=0.04, gt=0.0, json_schema_extra=PAPER)
    formula: Literal["von_mises", "frobenius"] = "von_mises"

    model_config = _section_config("STRAIN_")


class PointCloudConfig(BaseSettings):
    """Point-cloud sampling from boundary surfaces."""

    n_points: int = Field(default=20_000, ge=1, json_schema_extra=PAPER)
    seed: int = Field(default=0, ge=0)
    write_ply: bool = False

    model_config = _section_config("POINTCLOUD_")


class AugmentationSettings(BaseSettings):
    """Per-sample training augmentation."""

    crop: bool = True
    crop_fraction: float = Field(default=0.95, gt=0.0, le=1.0)
    subsample: bool = False
    subsample_count: int = Field(default=1024, ge=1)
    rotate: bool = True
    rotation_deg: float = Field(default=5.0, ge=0.0)
    translate: bool = True
    translation_mm: float = Field(default=0.05, ge=0.0)
    noise: bool = True
    noise_sigma_mm: float = Field(default=0.005, ge=0.0)

    model_config = _section_config("AUGMENT_")


class DgcnnConfig(BaseSettings):
    """Dynamic graph CNN hyperparameters."""

    k: int = Field(default=20, ge=1, json_schema_extra=PAPER)
    edge_channels: list[int] = Field(default_factory=lambda: [64, 64, 128])
    aggregation_width: int = Field(default=256, ge=1, json_schema_extra=PAPER)
    head_widths: list[int] = Field(default_factory=lambda: [128, 64, 2])
    leaky_slope: float = Field(default=0.2, ge=0.0, lt=1.0)
    input_channels: int = Field(default=4, ge=1, json_schema_extra=PAPER)
    spatial_first_metric: bool = True
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    batch_size: int = Field(default=8, ge=1)
    epochs: int = Field(default=200, ge=1)
    patience: int = Field(default=20, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    seed: int = Field(default=0, ge=0)

    model_config = _section_config("DGCNN_")

    @model_validator(mode="after")
    def _check_widths(self) -> "DgcnnConfig":
        if not self.edge_channels or any(width < 1 for width in self.edge_channels):
            raise ValueError("edge_channels must list positive widths")
        if not self.head_widths or any(width < 1 for width in self.head_widths):
            raise ValueError("head_widths must list positive widths")
        if self.head_widths[-1] != 2:
            raise ValueError("the last head width must equal the number of classes (2)")
        return self


class ForestConfig(BaseSettings):
    """Structural-parameter random forest."""

    n_trees: int = Field(default=100, ge=1, json_schema_extra=PAPER)
    max_features: int = Field(default=5, ge=1)
    min_samples_split: int = Field(default=2, ge=2)
    bootstrap: bool = True
    seed: int = Field(default=0, ge=0)

    model_config = _section_config("FOREST_")


class AutoencoderConfig(BaseSettings):
    """Central-section autoencoder and its frozen-encoder classifier."""

    raster: tuple[int, int] = (64, 96)
    n_classes: int = Field(default=8, ge=2)
    hidden_width: int = Field(default=128, ge=1)
    latent_width: int = Field(default=64, ge=1, json_schema_extra=PAPER)
    leaky_slope: float = Field(default=0.2, ge=0.0, lt=1.0)
    batch_size: int = Field(default=16, ge=1)
    epochs: int = Field(default=100, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    classifier_hidden: int = Field(default=32, ge=1)
    classifier_epochs: int = Field(default=200, ge=1)
    classifier_learning_rate: float = Field(default=1e-3, gt=0.0)
    patience: int = Field(default=20, ge=1)
    seed: int = Field(default=0, ge=0)

    model_config = _section_config("AE_")

    @field_validator("raster")
    @classmethod
    def _positive_raster(cls, value: tuple[int, int]) -> tuple[int, int]:
        if min(value) < 1:
            raise ValueError("raster must be positive")
        return value


class EvaluationConfig(BaseSettings):
    """Splits, cross-validation and reporting."""

    fractions: tuple[float, float, float] = Field(
        default=(0.70, 0.15, 0.15), json_schema_extra=PAPER
    )
    folds: int = Field(default=5, ge=2, json_schema_extra=PAPER)
    seed: int = Field(default=0, ge=0)
    methods: list[Literal["dgcnn", "rf", "ae"]] = Field(
        default_factory=lambda: ["dgcnn", "rf", "ae"]
    )
    density_radius_mm: float = Field(default=0.075, gt=0.0, json_schema_extra=PAPER)
    annulus: tuple[float, float] = (0.7, 1.5)
    roc_grid_points: int = Field(default=101, ge=2)

    model_config = _section_config("EVAL_")

    @field_validator("fractions")
    @classmethod
    def _fractions_sum_to_one(
        cls, value: tuple[float, float, float]
    ) -> tuple[float, float, float]:
        if any(part <= 0 for part in value) or abs(sum(value) - 1.0) > 1e-9:
            raise ValueError("fractions must be positive and sum to 1")
        return value

    @field_validator("methods")
    @classmethod
    def _distinct_methods(cls, value: list[str]) -> list[str]:
        if not value or len(set(value)) != len(value):
            raise ValueError("methods must be a non-empty list without repeats")
        return value


class Settings(BaseSettings):
    """Application settings"""

    app_name: str = "ONH Robustness Lab"
    app_version: str = "1.0.0"
    debug: bool = False
    log_file: Optional[str] = Field(
        default=None,
        description="Mirror log records to this rotating file when set.",
    )
    jobs: int = Field(default=1, ge=1)
    output_dir: str = "runs"

    phantom: PhantomConfig = Field(default_factory=PhantomConfig)
    strain: StrainConfig = Field(default_factory=StrainConfig)
    pointcloud: PointCloudConfig = Field(default_factory=PointCloudConfig)
    augmentation: AugmentationSettings = Field(default_factory=AugmentationSettings)
    dgcnn: DgcnnConfig = Field(default_factory=DgcnnConfig)
    forest: ForestConfig = Field(default_factory=ForestConfig)
    autoencoder: AutoencoderConfig = Field(default_factory=AutoencoderConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    model_config = SettingsConfigDict(
        env_prefix="ONH_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )


# Global settings instance
settings = Settings()
