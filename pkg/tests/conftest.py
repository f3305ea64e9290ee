import numpy as np
import pytest

from cavitynet.network import CavityParams, DeviceConfig

# Parameter set obtained from the measured hybridization stack.
FIT_SET = dict(lambda_c1=1325.9132, q_e=10165.0, q_i1=35460.0, q_i2=34441.0,
               phi1=0.78 * np.pi, phi2=1.44 * np.pi)
EMITTER_WAVELENGTH = 1325.880
TAU0 = 960e-9


def fit_set_device(lambda_c2=None, probe=None, **overrides) -> DeviceConfig:
    p = {**FIT_SET, **overrides}
    lam2 = p["lambda_c1"] if lambda_c2 is None else lambda_c2
    c1 = CavityParams.from_q("C1", p["lambda_c1"], p["q_e"], p["q_i1"])
    c2 = CavityParams.from_q("C2", lam2, p["q_e"], p["q_i2"])
    return DeviceConfig((c1, c2), p["phi1"], p["phi2"],
                        p["lambda_c1"] if probe is None else probe)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fit_device():
    return fit_set_device()
