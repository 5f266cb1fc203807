import time

import numpy as np
import pytest

from norminflate import lab as lab_module
from norminflate.lab import Lab
from norminflate.lacunary import LacunaryParams, make_initial_data
from norminflate.picard import rho1_split
from norminflate.utilities import parallel_map


def test_entries_are_cached():
    lab = Lab(LacunaryParams(r=2, K=2))

    assert lab.initial_data is lab.initial_data
    assert lab.frequencies is lab.frequencies
    assert lab.picard(0.1) is lab.picard(0.1)
    assert lab.data_norms(1.0) is lab.data_norms(1)


def test_rho1_parts_reuse_picard_state():
    lab = Lab(LacunaryParams(r=2, K=2))
    state = lab.picard(0.1)

    assert lab.rho1_parts(0.1) is state.rho1_parts
    assert ("rho1_parts", 0.1) not in lab._cache


def test_rho1_parts_without_picard_state():
    p = LacunaryParams(r=2, K=2)
    lab = Lab(p)
    parts = lab.rho1_parts(0.2)

    assert ("picard", 0.2) not in lab._cache
    u0, rho0 = make_initial_data(p)
    for got, expected in zip(parts, rho1_split(u0, rho0, 0.2)):
        assert got.freqs == expected.freqs
        np.testing.assert_array_equal(got.sin, expected.sin)


def test_set_overrides_an_entry():
    lab = Lab(LacunaryParams())
    lab.set("initial_data", "stub")

    assert lab.initial_data == "stub"


def test_unknown_entry():
    with pytest.raises(KeyError, match="Unknown lab entry: 'nonsense'"):
        Lab(LacunaryParams()).get("nonsense")


def test_concurrent_access_builds_once(monkeypatch):
    calls = []

    def slow_initial_data(p):
        calls.append(p)
        time.sleep(0.05)
        return make_initial_data(p)

    monkeypatch.setattr(lab_module, "make_initial_data", slow_initial_data)
    lab = Lab(LacunaryParams(r=2))
    out = parallel_map(lambda _: lab.initial_data, range(8), jobs=4)

    assert len(calls) == 1
    assert all(item is out[0] for item in out)
