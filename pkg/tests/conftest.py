import pytest

from hypercnot import CavityParams, GateConfig

# The reference operating point used throughout: resonance, kappa = 1,
# kappa_s = 0.1 kappa, gamma = 0.1 kappa, g = 3 (kappa + kappa_s) = 3.3.
BENCH_G_RATIO = 3.0
BENCH_KS_RATIO = 0.1
BENCH_GAMMA_RATIO = 0.1


@pytest.fixture
def bench_params() -> CavityParams:
    return CavityParams.from_ratios(BENCH_G_RATIO, BENCH_KS_RATIO, BENCH_GAMMA_RATIO)


@pytest.fixture
def bench_config(bench_params) -> GateConfig:
    return GateConfig(params=bench_params)
