import numpy as np
import pytest

from pvsc import indicators as ind
from pvsc.model import DispatchSolution


def _sol(load, avail, pl, px, curt, bl=None, pb=None):
    z = np.zeros((1, 24))

    def row(v):
        a = np.zeros((1, 24))
        a[0, :len(v)] = v
        return a

    load, avail, pl, px, curt = map(row, (load, avail, pl, px, curt))
    bl = z if bl is None else row(bl)
    pb = z if pb is None else row(pb)
    grid = load - pl - bl
    return DispatchSolution(np.array([2.0]), np.array([1]), load, avail, avail, pl, pb, px, curt, bl, grid, z,
                            np.zeros(12), np.zeros(12), np.zeros(12), np.zeros(12))


def test_values_on_hand_built_day():
    # load 4 kWh; PV 5 kWh of which 2 to load, 1 to battery, 1 exported, 1 curtailed; battery returns 0.8
    s = _sol([1, 1, 1, 1], [0, 5], [0, 2], [0, 1], [0, 1], bl=[0, 0, 0.8], pb=[0, 1])
    assert ind.self_consumed(s) == pytest.approx(2 * 2.8)
    assert ind.ssr(s) == pytest.approx(70.0)
    assert ind.delivered_pv(s) == pytest.approx(8.0)
    assert ind.scr(s) == pytest.approx(100 * 2.8 / 4)
    assert ind.energy_imported(s) == pytest.approx(2 * 1.2)
    assert ind.eir(s) == pytest.approx(100 * 1 / 1.2)
    assert ind.curtailed_share(s) == pytest.approx(20.0)


def test_no_exports_gives_full_self_consumption_and_zero_eir():
    s = _sol([2, 2], [3], [2], [0], [1])
    assert ind.scr(s) == 100.0
    assert ind.eir(s) == 0.0


def test_degenerate_cases():
    s = _sol([0], [0], [0], [0], [0])
    assert ind.ssr(s) == 0.0 and ind.scr(s) == 0.0 and ind.eir(s) == 0.0
    s = _sol([1], [2], [1], [1], [0])
    assert ind.eir(s) == float("inf")


def test_rooftop_fraction():
    assert ind.rooftop_fraction(10.0, 10.0, 200.0) == 50.0
    with pytest.raises(ValueError):
        ind.rooftop_fraction(1.0, 10.0, 0.0)
