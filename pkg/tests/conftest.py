import os
import textwrap

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from back_end.vlc_core.channel import ChannelSet, build_channels
from back_end.vlc_core.objective import PowerBudget, SignalStats
from back_end.vlc_core.scene import SceneConfig, build_scene
from back_end.vlc_core.solver import SolverOptions

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.register_profile("thorough", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

TINY_SCENE = dict(
    room_dims=(4.0, 4.0, 3.0),
    led_grid=(2, 1),
    pd_center=(1.0, 2.0, 0.5),
    pd_spacing=0.2,
    pd_grid=(2, 1),
    irs_corners=((0.0, 1.0, 1.2), (0.0, 3.0, 2.8)),
    irs_grid=(2, 2),
)

TINY_CONFIG_TOML = """
[scene]
room_dims = [4.0, 4.0, 3.0]
led_grid = [2, 1]
pd_center = [1.0, 2.0, 0.5]
pd_spacing = 0.2
pd_grid = [2, 1]
irs_corners = [[0.0, 1.0, 1.2], [0.0, 3.0, 2.8]]
irs_grid = [2, 2]

[signal]
n_streams = 2

[budget]
p_total = 20.0
dc_bias = 1.0

[solver]
max_outer = 50
max_inner = 500

[ber]
snr_db = [20.0, 30.0]
trials = 2000
partition_size = 1000

[experiment]
schemes = ["proposed", "greedy", "random", "no_irs"]
random_seeds = 2
"""


@pytest.fixture
def tiny_scene_config():
    return SceneConfig(**TINY_SCENE)


@pytest.fixture
def tiny_scene(tiny_scene_config):
    return build_scene(tiny_scene_config)


@pytest.fixture
def tiny_chans(tiny_scene):
    return build_channels(tiny_scene)


@pytest.fixture
def tiny_stats():
    return SignalStats(sigma_x2=1.0, sigma_w2=1e-14, n_streams=2, pam_order=4)


@pytest.fixture
def tiny_budget():
    return PowerBudget.uniform(p_total=20.0, dc_bias=1.0, n_leds=2)


@pytest.fixture
def fast_opts():
    return SolverOptions(max_outer=50, max_inner=500)


@pytest.fixture(scope="session")
def reference_scene():
    return build_scene(SceneConfig())


@pytest.fixture(scope="session")
def reference_chans(reference_scene):
    return build_channels(reference_scene)


@pytest.fixture
def random_channels():
    """
    Factory for dense random channel sets with O(1) gains
    """
    def make(seed: int, n_units: int, n_leds: int, n_pds: int) -> ChannelSet:
        rng = np.random.default_rng(seed)
        return ChannelSet(
            los=rng.uniform(0.1, 1.0, size=(n_pds, n_leds)),
            nlos=rng.uniform(0.0, 1.0, size=(n_units, n_leds * n_pds)),
        )
    return make


@pytest.fixture
def tiny_config_path(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(textwrap.dedent(TINY_CONFIG_TOML))
    return str(path)


@pytest.fixture
def bare_scene():
    return build_scene(SceneConfig(**{**TINY_SCENE, "irs_grid": (0, 0)}))
