"""Acceptance criteria 1-11, each at its stated tolerance.

Each test records a one-line verdict that is repeated in the terminal summary.
"""

import math
import time
from pathlib import Path

import numpy as np
import scipy.fft

from wwlab.config import load_config
from wwlab.observables import CenteredCoordinate, Const, TorusCharacter
from wwlab.recurrence import bourgain_constant
from wwlab.runner import run
from wwlab.sampling import SamplePlan
from wwlab.seminorms import SeminormQuery, seminorm_estimate
from wwlab.systems import Bernoulli, Rotation
from wwlab.trig import DEFAULT_OVERSAMPLE, sup_modulus
from wwlab.ww import WWQuery, ww_average

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GOLDEN = (math.sqrt(5) - 1) / 2


def cfg(name, **overrides):
    return load_config(CONFIGS / name, overrides)


def test_criterion_01_van_der_corput(criterion):
    t0 = time.perf_counter()
    res = run(cfg("vdc.yaml"))
    elapsed = time.perf_counter() - t0
    s = res.summary
    Ns = {r["N"] for r in res.rows}
    ok = s["pass"] == 1000 and s["fail"] == 0 and elapsed < 30 and min(Ns) >= 8 and max(Ns) <= 1024
    criterion(1, ok, f"{s['pass']}/1000 sequences, {s['checks']['pass']} checks over 3 variants, {elapsed:.1f}s")
    assert ok


def test_criterion_02_sup_bracket_oracle(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    exceed, worst = 0, 0.0
    for _ in range(200):
        N = int(rng.integers(1, 257))
        u = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        est = sup_modulus(u)
        # reference grid 64 times denser than the bracket's own grid
        M = 64 * est.grid_size
        ref = float(np.max(np.abs(scipy.fft.fft(np.conj(u), n=M)))) / N
        exceed += ref > est.upper
        worst = max(worst, est.width / est.upper)
    elapsed = time.perf_counter() - t0
    ok = exceed == 0 and worst < 1e-2 and elapsed < 20
    criterion(2, ok, f"oversample {DEFAULT_OVERSAMPLE}: {exceed} reference exceedances, "
                     f"max width/upper {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_bourgain_j2(criterion):
    results = {}
    for name in ("bourgain_j2_skew.yaml", "bourgain_j2_bernoulli.yaml"):
        res = run(cfg(name))
        results[name] = res
    rows = [r for res in results.values() for r in res.rows]
    cert = sum(r["certified"] for r in rows)
    C = next(iter(results.values())).summary["constant"]
    ok = len(rows) == 300 and cert == 300
    criterion(3, ok, f"{cert}/{len(rows)} certified (50 trials x 2 systems x 3 N, 1024 samples), C = {C:.5f}")
    assert ok


def test_criterion_04_bourgain_j3(criterion):
    res = run(cfg("bourgain_j3.yaml"))
    rows = res.rows
    cert = sum(r["certified"] for r in rows)
    C, NJ = res.summary["constant"], res.summary["N_J"]
    assert (C, NJ) == bourgain_constant(3, [1, 2, 3])
    ok = len(rows) == 60 and cert == 60 and all(r["constant"] == C for r in rows)
    criterion(4, ok, f"{cert}/{len(rows)} certified, C_3 = {C:.5f}, N_J = {NJ}")
    assert ok


def test_criterion_05_kronecker_non_decay(criterion):
    worst = 0.0
    for N in (64, 128, 256, 512, 1024, 2048, 4096):
        r = ww_average(WWQuery(TorusCharacter((1,)), Rotation(GOLDEN), 1, N, plan=SamplePlan(16, N)))
        worst = max(worst, abs(r.value - 1), r.certified_upper - r.value)
    ok = worst < 1e-3
    criterion(5, ok, f"max(|value - 1|, width) = {worst:.2e} over N = 64..4096")
    assert ok


def test_criterion_06_bernoulli_decay(criterion):
    res = run(cfg("ww_decay_bernoulli.yaml"))
    fit = res.summary["fit"]
    positive = all(r["value"] > 0 for r in res.rows)
    ok = positive and fit["slope"] >= 1 / 6 - 0.05 and fit["r2"] >= 0.8
    criterion(6, ok, f"slope {fit['slope']:.4f} (need >= {1 / 6 - 0.05:.4f}), r2 {fit['r2']:.3f}")
    assert ok


def test_criterion_07_skew_decay(criterion):
    res = run(cfg("ww_decay_skew.yaml"))
    fit = res.summary["fit"]
    note = res.summary["angles"]["note"]
    ok = all(r["value"] > 0 for r in res.rows) and fit["slope"] >= 1 / 24 and fit["r2"] >= 0.7
    criterion(7, ok, f"slope {fit['slope']:.4f} (need >= {1 / 24:.4f}), r2 {fit['r2']:.3f}; angle note recorded")
    assert ok and "almost every angle" in note


def test_criterion_08_seminorm_exactness(criterion):
    cases = [
        ("rotation character", TorusCharacter((1,)), Rotation(GOLDEN), 1.0),
        ("constant 0.7", Const(0.7), Rotation(GOLDEN), 0.7),
        ("constant -2+1j", Const(-2 + 1j), Rotation(GOLDEN), abs(-2 + 1j)),
        ("centered coordinate", CenteredCoordinate(0), Bernoulli((0.5, 0.5)), 0.0),
    ]
    worst = 0.0
    for _, f, s, want in cases:
        for H in (16, 64):
            r = seminorm_estimate(SeminormQuery(f, s, 2, H, "exact"))
            assert r.exact
            worst = max(worst, abs(r.value - want))
    ok = worst <= 1e-12
    criterion(8, ok, f"max deviation {worst:.1e} at H in (16, 64), exact integration")
    assert ok


def test_criterion_09_return_times_chain(criterion):
    skew = run(cfg("rt_chain.yaml"))
    bern = run(cfg("rt_chain.yaml", system={"kind": "bernoulli"},
                   observables=[{"kind": "centered", "index": 0}, {"kind": "pinsker", "cylinder": {0: 1}, "cutoff": 1}]))
    rows = skew.rows + bern.rows
    cert = sum(r["certified"] for r in rows)
    ok = len(rows) == 120 and cert == len(rows)
    criterion(9, ok, f"{cert}/{len(rows)} certified (20 trials x 2 systems x 3 N)")
    assert ok


def test_criterion_10_classical(criterion):
    res = run(cfg("classical.yaml"))
    by = res.summary["by_check"]
    powers = {r["param"] for r in res.rows if r["check"] == "power_lemma"}
    holder_n = len({r["trial"] for r in res.rows if r["check"] == "holder_avg"})
    ok = res.summary["fail"] == 0 and len(powers) == 6 and holder_n == 100 and by["maximal"]["pass"] == 1
    criterion(10, ok, "; ".join(f"{k} {v['pass']}/{v['pass'] + v['fail']}" for k, v in sorted(by.items()))
              + " (power lemma at a = +-1 passes within its bracket)")
    assert ok


def test_criterion_11_reproducibility(criterion):
    small = dict(Ns={"start": 256, "stop": 1024}, samples=16)
    texts = [run(cfg("ww_decay_skew.yaml", workers=w, **small)).csv_text for w in (1, 8, 1)]
    bour = [run(cfg("bourgain_j3.yaml", workers=w, trials=3, Ns=[256, 1024])).csv_text for w in (1, 8)]
    ok = texts[0] == texts[1] == texts[2] and bour[0] == bour[1]
    criterion(11, ok, "ww-decay and bourgain CSV byte-identical across 1 and 8 workers and reruns")
    assert ok
