"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary block at
the end of the pytest output lists every criterion.
"""

import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from noondistill.cascade import (
    CascadeSpec,
    analytics,
    enumerate_resolving,
    fig4_sweep,
    odd_analytics,
    optimal_schedule,
    p_all_11_odd,
    p_success_even,
    resolving_success,
)
from noondistill.cli import main
from noondistill.fock import apply_phase, fidelity, single_photon_target
from noondistill.montecarlo import simulate_cascade, simulate_resolving
from noondistill.unit import noon_unit_table, prob_closed_form

PHI_GRID = [0.0, math.pi / 14, 0.5, 1.3, 2.9]


def test_criterion_1_tables(criterion):
    rng = np.random.default_rng(20240601)
    with criterion(1, "which-way and eraser tables at 20 random (rho, phi), 1e-12", limit=1.0):
        for rho, phi in zip(rng.uniform(0, 1, 20), rng.uniform(-math.pi, math.pi, 20)):
            t2, r2 = 1 - rho, rho
            which_way = {(0, 0): t2 * t2, (0, 1): t2 * r2, (1, 0): t2 * r2, (0, 2): r2 * r2 / 2, (2, 0): r2 * r2 / 2}
            eraser = {
                (0, 0): t2 * t2, (0, 1): t2 * r2, (1, 0): t2 * r2,
                (0, 2): r2 * r2 * math.sin(phi) ** 2 / 2, (2, 0): r2 * r2 * math.sin(phi) ** 2 / 2,
                (1, 1): r2 * r2 * math.cos(phi) ** 2,
            }
            for erase, expected in ((False, which_way), (True, eraser)):
                got = {(o.event.m, o.event.n): o.probability for o in noon_unit_table(2, 2, phi, rho, erase=erase)}
                assert set(got) <= set(expected)
                for key, p in expected.items():
                    assert abs(got.get(key, 0.0) - p) <= 1e-12, (erase, key, rho, phi)


def test_criterion_2_closed_form_oracle(criterion):
    with criterion(2, "closed form vs full-state unit, N <= 8, all M, (m, n), rho, phi; 1e-12", limit=30.0):
        worst = worst_sum = 0.0
        for photons in range(1, 9):
            for mult in range(1, photons + 1):
                for rho in np.linspace(0.0, 1.0, 11):
                    for phi in PHI_GRID:
                        oracle = {(o.event.m, o.event.n): o.probability for o in noon_unit_table(photons, mult, phi, rho)}
                        total = 0.0
                        for m in range(photons + 1):
                            for n in range(photons + 1 - m):
                                p = prob_closed_form(photons, mult, phi, (m, n), rho)
                                total += p
                                worst = max(worst, abs(p - oracle.get((m, n), 0.0)))
                        worst_sum = max(worst_sum, abs(total - 1.0), abs(math.fsum(oracle.values()) - 1.0))
        assert worst <= 1e-12
        assert worst_sum <= 1e-12


def test_criterion_3_worked_example(criterion):
    with criterion(3, "N=7, phi=pi/14: p_cond(0.31)=0.50, p_cond(0.06)=0.90, p_all_11(0.31) in [0.0015, 0.003]", limit=1.0):
        for tracked in (False, True):
            at31 = analytics(CascadeSpec.uniform(7, math.pi / 14, 0.31), track_herald_phase=tracked)
            at06 = analytics(CascadeSpec.uniform(7, math.pi / 14, 0.06), track_herald_phase=tracked)
            assert abs(at31.p_cond - 0.50) <= 0.01
            assert abs(at06.p_cond - 0.90) <= 0.01
            assert 0.0015 <= at31.p_all_11 <= 0.0030


def _grid_max(evaluate, units):
    g = np.linspace(0.01, 0.99, 99)
    if units == 1:
        return float(evaluate([g]).max())
    axes = [g.reshape((-1,) + (1,) * (units - 2 - i)) for i in range(units - 1)]
    # loop the first unit so the working array stays at 99**(units-1)
    return max(float(np.max(evaluate([r] + axes))) for r in g)


def test_criterion_4_optimal_schedules(criterion):
    with criterion(4, "analytic schedules beat a 99-per-unit grid and p_max = N!/N^N exactly", limit=60.0):
        for photons in (3, 5, 7, 9, 2, 4, 6, 8):
            parity = "odd" if photons % 2 else "even"
            units = photons // 2
            opt = optimal_schedule(parity, photons)
            exact_schedule = (
                [Fraction(2, 2 * k + 1) for k in range(1, units + 1)] if parity == "odd"
                else [Fraction(1, 2)] + [Fraction(1, k) for k in range(2, units + 1)]
            )
            evaluate = p_all_11_odd if parity == "odd" else p_success_even
            ratio = Fraction(math.factorial(photons), photons**photons)
            assert evaluate(exact_schedule) == ratio
            assert opt.p_max_exact == ratio
            assert opt.schedule == pytest.approx([float(x) for x in exact_schedule], abs=1e-15)
            analytic = analytics(CascadeSpec.for_photons(photons, 0.0, opt.schedule)).p_success
            assert abs(analytic - float(ratio)) <= 1e-14 * float(ratio)
            assert _grid_max(evaluate, units) <= analytic


def test_criterion_5_resolving(criterion):
    with criterion(5, "resolving protocol: oracle to 1e-12, optimum (N-1)/N, sweep trend", limit=60.0):
        for photons in range(2, 9):
            for rho in np.linspace(0.0, 1.0, 11):
                exact, _ = enumerate_resolving(photons, 0.37, rho)
                assert abs(exact - resolving_success(photons, rho)) <= 1e-12
            grid = np.linspace(0.0, 1.0, 100_001)
            best = grid[np.argmax(resolving_success(photons, grid))]
            assert abs(best - (photons - 1) / photons) <= 1e-5
        rows = fig4_sweep(2, 20)
        assert all(r.resolving_max >= 0.368 for r in rows)
        assert all(r.coincidence_max < 0.01 for r in rows if r.photons >= 7)
        assert rows[5].coincidence_max == pytest.approx(0.00612, abs=5e-6)


def test_criterion_6_phase_correction(criterion):
    with criterion(6, "every resolving herald with m+n=N-1 is corrected to fidelity >= 1-1e-12, N <= 6"):
        checked = 0
        for photons in range(2, 7):
            for phi, rho in itertools.product(PHI_GRID, (0.2, 0.5, 0.85)):
                target = single_photon_target(photons, phi)
                outcomes = {(o.event.m, o.event.n): o for o in noon_unit_table(photons, photons, phi, rho)}
                for m in range(photons):
                    n = photons - 1 - m
                    assert (m, n) in outcomes
                    state = outcomes[(m, n)].transmitted.relabel({"a'": "a", "b'": "b"})
                    corrected = apply_phase(state, "b", (n - m) * math.pi / 2)
                    assert fidelity(corrected, target) >= 1 - 1e-12
                    checked += 1
                _, rows = enumerate_resolving(photons, phi, rho)
                assert len(rows) == photons and all(f >= 1 - 1e-12 for *_, f in rows)
        assert checked == sum(range(2, 7)) * len(PHI_GRID) * 3


def _within(value, p, n, k=3.0):
    return abs(value - p) <= k * math.sqrt(p * (1 - p) / n)


def test_criterion_7_monte_carlo(criterion):
    shots = 1_000_000
    with criterion(7, "10^6-shot Monte Carlo within 3 sigma of closed forms", limit=120.0):
        odd = simulate_cascade(CascadeSpec.optimal(5, 0.0), shots=shots, seed=1)
        assert _within(odd.efficiency_hat, 120 / 3125, shots)
        even = simulate_cascade(CascadeSpec.optimal(4, 0.0), shots=shots, seed=2)
        assert _within(even.efficiency_hat, 0.09375, shots)
        res = simulate_resolving(4, 0.0, 0.75, shots=shots, seed=3)
        assert _within(res.efficiency_hat, 27 / 64, shots)
        assert res.fidelity_hat == 1.0
        seven = simulate_cascade(CascadeSpec.uniform(7, math.pi / 14, 0.31), shots=shots, seed=4)
        p_cond = odd_analytics(CascadeSpec.uniform(7, math.pi / 14, 0.31)).p_cond
        assert abs(p_cond - 0.50) <= 0.01
        assert _within(seven.fidelity_hat, p_cond, seven.accepted)


def _cli(capsys, argv):
    assert main(argv) == 0
    return capsys.readouterr().out


def test_criterion_8_determinism(criterion, capsys):
    with criterion(8, "seeded runs byte-identical in CSV and JSON, with and without sharding"):
        base = ["simulate", "--N", "7", "--phi", "pi/14", "--rho", "0.31", "--shots", "200000", "--seed", "99"]
        csv_base = ["cascade", "--N", "4", "--optimal", "--simulate", "--shots", "200000", "--seed", "5", "--format", "csv"]
        outputs = {}
        for shards in ("1", "3", "8"):
            a = _cli(capsys, base + ["--shards", shards])
            b = _cli(capsys, base + ["--shards", shards])
            assert a == b
            assert _cli(capsys, csv_base + ["--shards", shards]) == _cli(capsys, csv_base + ["--shards", shards])
            outputs[shards] = json.loads(a)
        # only the recorded shard layout differs between shard counts
        canon = set()
        for data in outputs.values():
            data["simulation"].pop("shard_layout")
            canon.add(json.dumps(data, sort_keys=True))
        assert len(canon) == 1
        csvs = {_cli(capsys, csv_base + ["--shards", s]) for s in ("1", "4")}
        assert len(csvs) == 1
