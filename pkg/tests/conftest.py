"""Shared builders for the test suite."""

import numpy as np
import pytest

from aerialcf.scenario import RadioParams, ScenarioConfig, build_scenario


def small_radio(n_side=2, g_side=3, s_side=4):
    return RadioParams(
        n_w=n_side, n_l=n_side, g_w=g_side, g_l=g_side, s_w=s_side, s_l=s_side
    )


def small_config(k=4, m=4, **kw):
    kw.setdefault("radio", small_radio())
    return ScenarioConfig(n_users=k, n_uxnbs=m, **kw)


def small_scenario(k=4, m=4, seed=0, **kw):
    return build_scenario(small_config(k, m, **kw), seed)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
