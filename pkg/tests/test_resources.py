import pytest

from app.pipelines.phantom import load_coupling
from app.services.experiment import reference_metrics
from app.utils.resources import load_resource_json


def test_bundled_resources_share_one_loader():
    coupling = load_resource_json("phantom/coupling.json")
    assert load_coupling().load.amplitude_per_radius == pytest.approx(
        coupling["load"]["amplitude_per_radius"]
    )
    reference = reference_metrics()
    assert (reference["dgcnn"].mean, reference["dgcnn"].std) == (0.76, 0.08)
    assert set(reference) == {"ae", "dgcnn", "dice", "rf"}


def test_missing_resource_is_empty():
    assert load_resource_json("reference/does_not_exist.json") == {}
