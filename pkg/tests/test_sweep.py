import json
import math

import numpy as np
import pytest

from cusplab import sweep as sw
from cusplab.asymptotics import BelowThresholdError, blinking_epsilons, tau0, threshold
from cusplab.geometry import CuspGeometry
from cusplab.reduced_model import reduced_branch, reduced_crossings, reduced_theta
from cusplab.sweep import (
    Label,
    ResolutionError,
    SweepError,
    SweepResult,
    branches_csv,
    branches_svg,
    classify_branches,
    crossing_match,
    detect_crossings,
    epsilon_grid,
    gliding_report,
    rows_csv,
    solve_at,
    stable_report,
    sweep_epsilon,
    synthetic_sweep,
    track_branches,
    trapped_modes,
)

G = CuspGeometry()
H = 0.1


def _reduced_sweep(eps, count, d=1.0):
    spectra = [[reduced_branch(k, e, d, G) for k in range(1, count + 1)] for e in eps]
    return synthetic_sweep(eps, spectra)


def test_epsilon_grid():
    grid = epsilon_grid(1e-3, 1e-1, 30)
    assert len(grid) == 61
    assert grid[0] == pytest.approx(0.1) and grid[-1] == pytest.approx(1e-3)
    assert np.allclose(np.diff(np.log10(grid)), -1 / 30)


def test_two_point_sweep_shape():
    res = sweep_epsilon(G, 0.04, 0.05, count=5, h=H, epsilons=[0.05, 0.04])
    assert res.epsilons == [0.05, 0.04]
    assert len(res.records) == 2
    for rec in res.records:
        assert rec["status"] == "ok" and len(rec["eigenvalues"]) == 5
        assert max(rec["residuals"]) <= 1e-8
        assert set(rec["parity"]) <= {"even", "odd"}


def test_resolution_precondition():
    with pytest.raises(ResolutionError):
        sweep_epsilon(G, 1e-5, 1e-1, h=H)
    with pytest.raises(ValueError):
        sweep_epsilon(G, 1e-2, 1e-1, points_per_decade=10, h=H)
    with pytest.raises(ValueError):
        sweep_epsilon(G, 1e-2, 0.3, h=H)


def test_restart_is_byte_identical(tmp_path):
    kwargs = dict(points_per_decade=20, count=4, h=H)
    full = tmp_path / "full"
    sweep_epsilon(G, 0.05, 0.06, out_dir=full, **kwargs)
    reference = (full / "sweep.json").read_text()
    # simulate a kill after the first solve: keep a truncated file and rerun
    part = tmp_path / "part"
    part.mkdir()
    doc = json.loads(reference)
    doc["records"] = doc["records"][:1]
    (part / "sweep.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    sweep_epsilon(G, 0.05, 0.06, out_dir=part, **kwargs)
    assert (part / "sweep.json").read_text() == reference
    # a different sweep in the same directory is refused
    with pytest.raises(SweepError):
        sweep_epsilon(G, 0.05, 0.06, out_dir=full, points_per_decade=20, count=5, h=H)


def test_in_memory_determinism():
    a = sweep_epsilon(G, 0.05, 0.06, epsilons=[0.06, 0.05], count=3, h=H).to_json()
    b = sweep_epsilon(G, 0.05, 0.06, epsilons=[0.06, 0.05], count=3, h=H).to_json()
    assert a == b
    assert SweepResult.from_json(a).to_json() == a


def test_failures_recorded_and_abort(monkeypatch):
    calls = {"n": 0}
    real = sw._solve_record

    def flaky(geom_dict, eps, *args):
        calls["n"] += 1
        if calls["n"] == 2:
            return {"epsilon": eps, "status": "failed", "error": "boom"}
        return real(geom_dict, eps, *args)

    monkeypatch.setattr(sw, "_solve_record", flaky)
    with pytest.raises(SweepError):
        sweep_epsilon(G, 0.04, 0.05, epsilons=[0.05, 0.04], count=3, h=H)


def test_reduced_branches_recover_k():
    eps = epsilon_grid(1e-6, 1e-1, 30)
    res = _reduced_sweep(eps, 6)
    branches = track_branches(res)
    assert len(branches) == 6
    for k, b in enumerate(sorted(branches, key=lambda b: b.lambdas[0]), start=1):
        assert len(b) == len(eps)
        assert [p[3] for p in b.points] == [k - 1] * len(eps)
        assert np.allclose(b.lambdas, reduced_branch(k, b.epsilons, 1.0, G))


def test_constant_spectrum_gives_flat_stable_branches():
    eps = epsilon_grid(1e-3, 1e-1, 20)
    res = synthetic_sweep(eps, [[0.7, 1.9, 3.1]] * len(eps))
    branches = classify_branches(track_branches(res), G)
    assert len(branches) == 3
    for b in branches:
        assert np.allclose(np.asarray(b.slopes)[1:-1], 0.0)
        assert b.label is Label.STABLE


def test_crossing_lines_not_swapped():
    eps = np.array(epsilon_grid(1e-3, 1e-1, 30))
    x = np.log(eps)
    x0 = x.mean() + 0.3 * (x[0] - x[1])  # crossing between two grid points
    up = 1.0 + 0.2 * (x - x0)
    down = 1.0 - 0.1 * (x - x0)
    spectra = [sorted([u, d]) for u, d in zip(up, down)]
    branches = track_branches(synthetic_sweep(eps, spectra))
    assert len(branches) == 2
    for b in branches:
        s = np.diff(b.lambdas) / np.diff(np.log(b.epsilons))
        assert np.allclose(s, s[0], rtol=1e-9)
    # an exact tie on a grid point is ambiguous: the branches split and are flagged
    x0 = x[30]
    spectra = [sorted([1.0 + 0.2 * (v - x0), 1.0 - 0.1 * (v - x0)]) for v in x]
    tied = track_branches(synthetic_sweep(eps, spectra))
    assert len(tied) > 2 and any(b.flags for b in tied)


def test_ambiguous_match_is_flagged():
    eps = [0.1, 0.09]
    res = synthetic_sweep(eps, [[1.0], [0.9, 1.1]])
    branches = track_branches(res)
    assert any(b.flags for b in branches)


def test_tracking_preconditions():
    with pytest.raises(ValueError):
        track_branches(synthetic_sweep([0.1, 0.01], [[1.0], [1.0]]))


def test_detect_crossings_reduced():
    eps = epsilon_grid(1e-6, 1e-1, 30)
    res = _reduced_sweep(eps, 8)
    for lam in (0.5, 1.0, 2.5):
        cs = detect_crossings(res, lam, G)
        exact = reduced_crossings(lam, G, 1e-6, 1e-1)
        assert len(cs.crossings) == len(exact)
        assert np.allclose(cs.crossings, exact, rtol=1e-6)
        assert np.allclose(cs.log_gaps, cs.predicted_gap, rtol=1e-5)
        rows = crossing_match(cs, reduced_theta(lam, G), G)
        assert all(r["ok"] and r["rel_log_error"] < 1e-6 for r in rows)


def test_crossings_below_threshold_rejected():
    res = _reduced_sweep(epsilon_grid(1e-3, 1e-1, 20), 3)
    with pytest.raises(BelowThresholdError):
        detect_crossings(res, 0.2, G)


def test_gliding_report_reduced_ratio_one():
    eps = epsilon_grid(1e-6, 1e-1, 60)
    branches = track_branches(_reduced_sweep(eps, 4))
    rows = gliding_report(branches, G, log_d=0.0)
    ratios = np.array([r["ratio"] for r in rows])
    assert len(ratios) > 100
    assert np.all(np.abs(ratios - 1) <= 1e-3)
    labelled = classify_branches(branches, G, log_d=0.0)
    assert all(b.label is Label.GLIDING for b in labelled)


def test_smooth_landing():
    eps = epsilon_grid(1e-30, 1e-28, 30)
    branches = track_branches(_reduced_sweep(eps, 12))
    rows = gliding_report(branches, G, log_d=0.0)
    e0 = eps[len(eps) // 2]
    at = [r for r in rows if r["epsilon"] == e0]
    low = [r["observed"] for r in at if r["lambda"] < 1.05 * threshold(G)]
    mid = [r["observed"] for r in at if abs(r["lambda"] - 2 * threshold(G)) < 0.05]
    assert low and mid and max(low) < min(mid)


def test_short_branches_skipped():
    res = synthetic_sweep([0.1, 0.095, 0.09], [[1.0], [0.99], [0.98]])
    assert gliding_report(track_branches(res), G) == []


def test_report_outputs():
    eps = epsilon_grid(1e-3, 1e-1, 20)
    branches = classify_branches(track_branches(_reduced_sweep(eps, 3)), G)
    text = branches_csv(branches)
    lines = text.splitlines()
    assert lines[0].startswith("epsilon,lambda,branch_id,slope,label")
    assert len(lines) == 1 + 3 * len(eps)
    assert rows_csv([{"a": 1.0, "b": 2}]).splitlines() == ["a,b", "1,2"]
    svg = branches_svg(branches, G, lambda_flat=0.5)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert branches_csv(branches) == text


@pytest.fixture(scope="module")
def trapped():
    return trapped_modes(G, h=0.05, epsilon=1e-2, count=3)


def test_trapped_modes_epsilon_insensitive(trapped):
    assert np.all(trapped.values > 0)
    assert np.all(trapped.rel_change < 1e-4)


def test_odd_sector_inside_full_spectrum(trapped):
    full = solve_at(G, 1e-2, 12, 0.05, split=False)["eigenvalues"]
    for v in trapped.values:
        assert np.min(np.abs(full - v)) / v < 1e-8


def test_trapped_modes_need_symmetry():
    with pytest.raises(ValueError):
        trapped_modes(CuspGeometry(mirror_symmetric=False), h=0.1)


def test_stable_report(trapped):
    lam_tr = float(trapped.values[0])
    rows = stable_report(G, lam_tr, [0.04, 0.02, 0.01], h=0.05, count=8, parity="odd")
    assert all(r["parity"] == "odd" and not r["flagged"] for r in rows)
    assert rows[-1]["gap"] < 1e-6
    with pytest.raises(ValueError):
        stable_report(G, lam_tr, [0.04], h=0.05, count=1, parity="odd")
