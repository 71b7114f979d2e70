import csv
import io
import itertools
import math

import numpy as np
import pytest

from bellgrid.bounds import (
    CSV_COLUMNS,
    HEADLINE,
    SettingGrid,
    classify,
    correlation_grid,
    ee_closed_form,
    ee_direct,
    ee_inner_product,
    ee_with_mode,
    plane_infinite_threshold,
    reports_to_csv,
    t_max,
    three_setting_bound,
    violation_window,
)
from bellgrid.tensor import CorrelationTensor, evaluate, ghz_werner_tensor


def random_tensor(rng, n):
    return CorrelationTensor(n, rng.uniform(-1, 1, 2**n), "random")


class TestSettingGrid:
    def test_default_angles(self):
        g = SettingGrid(4)
        assert np.allclose(g.angles, [0, math.pi / 3, 2 * math.pi / 3], atol=0)
        assert g.size == 81

    def test_angles_increasing_in_half_turn(self):
        for n in range(2, 9):
            a = SettingGrid(2, n).angles
            assert np.all(np.diff(a) > 0) and a[0] == 0 and a[-1] < math.pi

    def test_correlation_grid_axis_order(self):
        rng = np.random.default_rng(4)
        t = random_tensor(rng, 3)
        g = SettingGrid(3)
        e = correlation_grid(t, g)
        for l in itertools.product(range(3), repeat=3):
            assert e[l] == pytest.approx(evaluate(t, g.angles[list(l)]), abs=1e-13)


class TestEE:
    def test_two_party_nine_terms(self):
        # E = cos(a1 + a2) for the pure two-party state
        a = [l * math.pi / 3 for l in range(3)]
        brute = math.fsum(math.cos(x + y) ** 2 for x in a for y in a)
        assert brute == pytest.approx(4.5, abs=1e-14)
        assert ee_inner_product(ghz_werner_tensor(2, 1.0)) == pytest.approx(brute, abs=1e-13)

    def test_zero(self):
        assert ee_inner_product(CorrelationTensor.zeros(4)) == 0.0

    def test_six_party(self):
        t = ghz_werner_tensor(6, 0.1765)
        assert ee_closed_form(t, SettingGrid(6)) == pytest.approx(3**6 / 2 * 0.1765**2, rel=1e-14)
        assert ee_direct(t, SettingGrid(6)) == pytest.approx(11.354995125, rel=1e-12)

    def test_paths_agree_on_random_tensors(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 7))
            t = random_tensor(rng, n)
            g = SettingGrid(n)
            d, c = ee_direct(t, g), ee_closed_form(t, g)
            assert abs(d - c) <= 1e-9 * abs(c)

    @pytest.mark.parametrize("settings", [2, 4, 5])
    def test_closed_form_other_grids(self, settings):
        rng = np.random.default_rng(settings)
        t = random_tensor(rng, 3)
        g = SettingGrid(3, settings)
        assert ee_direct(t, g) == pytest.approx(ee_closed_form(t, g), rel=1e-12)

    def test_mode_switch(self):
        t = ghz_werner_tensor(17, 0.1)
        value, mode = ee_with_mode(t)
        assert mode == "closed_form"
        assert value == pytest.approx(3**17 / 2 * 0.01, rel=1e-12)
        with pytest.raises(ValueError):
            ee_direct(t, SettingGrid(17))
        assert ee_with_mode(ghz_werner_tensor(4, 0.1))[1] == "direct"

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            ee_inner_product(ghz_werner_tensor(3, 1.0), SettingGrid(4))


class TestTMax:
    def test_ghz(self):
        t = ghz_werner_tensor(5, 0.3)
        assert t_max(t, "grid_refine") == pytest.approx(0.3, abs=1e-10)
        assert t_max(t, "alternating") == pytest.approx(0.3, abs=1e-10)
        assert t_max(t, "closed_form_ghz") == 0.3

    def test_single_component(self):
        t = CorrelationTensor(2, [0.3, 0, 0, 0])
        for m in ("grid_refine", "alternating"):
            assert t_max(t, m) == pytest.approx(0.3, abs=1e-12)

    def test_zero(self):
        for m in ("grid_refine", "alternating"):
            assert t_max(CorrelationTensor.zeros(3), m) == 0.0

    def test_two_party_is_top_singular_value(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            t = random_tensor(rng, 2)
            sigma = np.linalg.svd(t.as_array(), compute_uv=False)[0]
            assert t_max(t, "grid_refine") == pytest.approx(sigma, abs=1e-10)
            assert t_max(t, "alternating") == pytest.approx(sigma, abs=1e-10)

    def test_methods_agree_on_random_tensors(self):
        rng = np.random.default_rng(12)
        for n in (2, 3, 4):
            for _ in range(10):
                t = random_tensor(rng, n)
                g, a = t_max(t, "grid_refine"), t_max(t, "alternating")
                assert a <= g + 1e-8
                assert a >= g - 1e-6

    def test_dense_sampling_never_exceeds(self):
        rng = np.random.default_rng(21)
        t = random_tensor(rng, 3)
        best = t_max(t, "grid_refine")
        samples = rng.uniform(0, 2 * math.pi, (5000, 3))
        assert max(evaluate(t, s) for s in samples) <= best + 1e-12

    @pytest.mark.parametrize("v", [0.1, 0.5, 1.0])
    def test_linear_in_visibility(self, v):
        for n in (2, 4, 6, 10):
            assert t_max(ghz_werner_tensor(n, v), "alternating") == pytest.approx(v, abs=1e-10)

    def test_seed_reproducible(self):
        t = random_tensor(np.random.default_rng(0), 5)
        assert t_max(t, seed=3) == t_max(t, seed=3)

    def test_errors(self):
        with pytest.raises(ValueError):
            t_max(ghz_werner_tensor(7, 1.0), "grid_refine")
        with pytest.raises(ValueError):
            t_max(ghz_werner_tensor(2, 1.0), "newton")
        with pytest.raises(ValueError):
            t_max(CorrelationTensor.zeros(2), "closed_form_ghz")

    def test_three_setting_bound(self):
        assert three_setting_bound(ghz_werner_tensor(6, 0.1765), "closed_form_ghz") == pytest.approx(11.296, abs=1e-12)
        assert three_setting_bound(ghz_werner_tensor(2, 1.0)) == pytest.approx(4.0, abs=1e-10)
        assert three_setting_bound(CorrelationTensor.zeros(3)) == 0.0


class TestWindow:
    def test_six(self):
        w = violation_window(6)
        assert w.lower == pytest.approx(0.1755829904, abs=1e-10)
        assert w.upper == pytest.approx(0.1767766953, abs=1e-10)
        assert w.nonempty

    def test_five(self):
        w = violation_window(5)
        assert w.lower == pytest.approx(0.2633744856, abs=1e-10)
        assert w.upper == 0.25
        assert not w.nonempty

    def test_two(self):
        w = violation_window(2)
        assert w.lower == pytest.approx(8 / 9, abs=1e-15)
        assert w.upper == pytest.approx(1 / math.sqrt(2), abs=1e-15)
        assert not w.nonempty

    def test_crossover(self):
        assert [violation_window(n).nonempty for n in range(2, 41)] == [False] * 4 + [True] * 35

    def test_contains_is_half_open(self):
        w = violation_window(6)
        assert not w.contains(w.lower)
        assert w.contains(w.upper)

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            violation_window(1)

    def test_plane_infinite_threshold(self):
        assert plane_infinite_threshold(6) == pytest.approx(2 * (2 / math.pi) ** 6, rel=1e-15)
        # the plane-infinite threshold sits below the three-setting one
        for n in range(2, 20):
            assert plane_infinite_threshold(n) < violation_window(n).lower


class TestClassify:
    def test_headline(self):
        r = classify(ghz_werner_tensor(6, 0.1765))
        assert r.three_setting_violated and r.zb_two_setting_exists
        assert r.verdict == HEADLINE
        assert r.window["nonempty"]

    def test_below_window(self):
        r = classify(ghz_werner_tensor(6, 0.17))
        assert not r.three_setting_violated
        assert r.zb_two_setting_exists
        assert r.ee_value == pytest.approx(3**6 / 2 * 0.17**2, rel=1e-12)
        assert r.three_setting_bound == pytest.approx(10.88, abs=1e-12)

    def test_zero(self):
        r = classify(CorrelationTensor.zeros(3))
        assert not r.three_setting_violated and r.zb_two_setting_exists
        assert r.plane_infinite_threshold is None

    def test_flags_recompute(self):
        rng = np.random.default_rng(9)
        for n in (2, 3, 4, 6):
            for v in np.linspace(0, 1, 9):
                r = classify(ghz_werner_tensor(n, float(v)))
                assert r.recompute_flags() == (r.zb_two_setting_exists, r.three_setting_violated)
                assert r.three_setting_bound == 2**n * r.t_max
        for _ in range(5):
            r = classify(random_tensor(rng, 3))
            assert r.recompute_flags() == (r.zb_two_setting_exists, r.three_setting_violated)

    def test_ghz_verdict_matches_window(self):
        for n in range(2, 12):
            w = violation_window(n)
            for v in np.linspace(0.01, 1, 60):
                r = classify(ghz_werner_tensor(n, float(v)))
                both = r.zb_two_setting_exists and r.three_setting_violated
                # keep clear of the boundaries where the 1e-9 tolerance decides
                if min(abs(v - w.lower), abs(v - w.upper)) > 1e-6:
                    assert both == w.contains(v)

    def test_csv(self):
        reports = [classify(ghz_werner_tensor(6, v)) for v in (0.17, 0.1765)]
        rows = list(csv.DictReader(io.StringIO(reports_to_csv(reports))))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert [r["violated"] for r in rows] == ["false", "true"]
        assert float(rows[1]["ee"]) == reports[1].ee_value
