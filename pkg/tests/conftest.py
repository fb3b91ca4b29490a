import pytest

from faas_advisor.calibration import CalibrationParams, load_calibration
from faas_advisor.costmodel import WorkloadProfile
from faas_advisor.workload import exchange_workload, scan_workload

# grids of the two microbenchmarks
SCAN_WORKERS = (86, 128, 256)
SCAN_MEMORIES = (384, 512, 640, 768, 1024, 1280, 1536, 1769, 2048, 2560, 3008, 4096)
EXCHANGE_WORKERS = (54, 64, 90, 132, 256)
EXCHANGE_MEMORIES = (1024, 1280, 1536, 1769, 2048, 2560, 3008, 4096)


@pytest.fixture
def calibration() -> CalibrationParams:
    return CalibrationParams()


@pytest.fixture
def flat_calibration() -> CalibrationParams:
    """Memory-independent rates so hand arithmetic stays simple."""
    return load_calibration(
        {
            "curves": {
                "network": [[1024, 78.7]],
                "compress": [[1024, 85.0]],
                "process": [[1024, 75.2]],
                "base_overhead": [[1024, 0.5]],
            }
        }
    )


@pytest.fixture
def scan_profile() -> WorkloadProfile:
    return scan_workload(32 * 1024, columns=8, partitions=256)


@pytest.fixture
def exchange_profile() -> WorkloadProfile:
    return exchange_workload(4 * 1024, columns=1, partitions=256, exchanged_fraction=1.0)
