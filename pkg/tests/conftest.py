import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pilotwave.params import FluidParams, ForcingParams, faraday_scales, nondim_groups  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# 0.4 mm radius silicone-oil drop
DROP_MASS = 965.0 * 4.0 / 3.0 * math.pi * (0.4e-3) ** 3

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def silicone(gamma=0.0, c=0.3, depth=6e-3, freq=80.0):
    fluid = FluidParams.from_dynamic_viscosity(965.0, 0.0209, 2e-2, DROP_MASS, c)
    forcing = ForcingParams(freq, gamma)
    scales = faraday_scales(fluid, forcing, depth)
    return nondim_groups(fluid, forcing, scales, depth)


@pytest.fixture
def groups():
    return silicone()


@pytest.fixture(scope="session")
def config_dir():
    return CONFIGS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda n: (n[0], int(n[1:]))):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
