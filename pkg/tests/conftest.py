import numpy as np
import pytest

import smsrecon as sr


def random_mc(seed: int, coils: int = 3, rows: int = 8, cols: int = 8) -> np.ndarray:
    """Seeded random multi-coil k-space, complex128."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((coils, rows, cols)) + 1j * rng.standard_normal(
        (coils, rows, cols)
    )


def random_stack(seed: int, b: int = 3, coils: int = 2, rows: int = 12, cols: int = 12):
    rng = np.random.default_rng(seed)
    shape = (b, coils, rows, cols)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture(scope="session")
def standard_case():
    """The standard phantom acquisition: 96x96, 4 coils, MB3, R=2, ACS=32."""
    spec = sr.PhantomSpec(rows=96, cols=96, b=3, coils=4, seed=0, noise_sigma=0.0)
    return sr.build_case(spec, b=3, r=2, acs=32, seed=1)


@pytest.fixture(scope="session")
def standard_kernels(standard_case):
    case = standard_case
    return sr.grappa_calibrate(
        case.measurement,
        case.stack,
        case.scheme,
        (case.mask.acs_lo, case.mask.acs_hi),
    )


@pytest.fixture(scope="session")
def small_case():
    """A small, fast case for protocol and CLI tests."""
    spec = sr.PhantomSpec(rows=32, cols=36, b=3, coils=2, seed=2, noise_sigma=0.0)
    return sr.build_case(spec, b=3, r=2, acs=12, seed=3)
