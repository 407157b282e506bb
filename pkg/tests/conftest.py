import numpy as np
import pytest

from chaoslab.meanfield import critical_coupling
from chaoslab.model import curie_weiss_model, gaussian_model

# Frozen regression constants, all produced by independent oracles
# (composite Simpson with 1e6+1 points on [-10, 10] unless noted) and
# cross-checked before freezing.
QUARTIC_NORM = 2.563693352040848          # int exp(-x^4/4)
LOG_QUARTIC_GAUSS = 0.6602353898558172    # log int exp(-x^4/4 - x^2/2)
X2_MOMENT = 0.4679199169736652            # <x^2> for theta=1, sigma=1, tilt 0
J_CRIT = 2.1371178351792204               # 1 / X2_MOMENT
F_AT_1 = 0.47684226501271426              # f(1) at J = 0.5 * J_CRIT
TANH_ROOT = 0.9575040240772688            # root of tanh(2x) = x (brentq oracle)
H_STAR_SUPER = 1.3145644300027486         # h = f(h) root at J = 1.5 * J_CRIT
GAUSS_JOINT_KL = 0.15342640972002736      # 4x4 matrix oracle, N=4, J=0.5, k=4
N2_KL_LIMIT_SAMPLE = 0.24983735869955126  # N^2 * KL(k=1) at N = 2^10
W2_N32 = 0.007580132839907034             # W2(m^{32,1}, m_*) at J = 0.5 * J_CRIT


@pytest.fixture(scope="session")
def quartic_model():
    """Sub-critical quartic model at half the critical coupling."""
    return curie_weiss_model(1.0, 1.0, 0.5 * J_CRIT)


@pytest.fixture(scope="session")
def quartic_jc(quartic_model):
    return critical_coupling(quartic_model)


@pytest.fixture(scope="session")
def gauss_model():
    return gaussian_model(1.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
