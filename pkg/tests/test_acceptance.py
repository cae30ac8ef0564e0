"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line. The lines
are repeated in the pytest terminal summary.
"""
import contextlib
import itertools
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from driftpac.cli import main
from driftpac.config import parse_config
from driftpac.domain import Oracle, SignDef, SignSchema
from driftpac.drift import diagnose, enumerate_worlds, fuse, train_ensemble
from driftpac.errors import ConfigError
from driftpac.experiments import (error_claim, pac_validate, reproduce_table1,
                                  simulate)
from driftpac.kernels import (KernelSpec, gram, kernel_eval, train_classifier,
                              train_regressor)
from driftpac.pac import PRINTED_TABLE, PlanningQuery, min_sample_size
from driftpac.therapy import TherapyPlan, advise, rank_plans


@contextlib.contextmanager
def criterion(number, title, time_limit=None):
    start = time.perf_counter()
    ok = False
    detail = ""
    try:
        yield
        elapsed = time.perf_counter() - start
        if time_limit is not None and elapsed >= time_limit:
            detail = f" (runtime {elapsed:.2f}s exceeds {time_limit}s)"
            raise AssertionError(f"criterion {number} too slow: {elapsed:.2f}s")
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        status = "PASS" if ok else "FAIL"
        line = f"ACCEPTANCE {number} {status}: {title} [{elapsed:.2f}s]{detail}"
        ACCEPTANCE_LINES.append(line)
        print("\n" + line)


def _summary(rep):
    return dict(s.split("=", 1) for s in rep.summary if "=" in s)


# 1 -------------------------------------------------------------------------

def test_1_table_reproduction():
    with criterion(1, "bound table within +-1 of printed values, diagonal exact", 1.0):
        rep = reproduce_table1()
        printed = sorted(PRINTED_TABLE.values())
        assert printed == [39, 41, 45, 87, 92, 100, 346, 366, 400]
        for eps, delta, got, want, diff in rep.rows:
            assert got == min_sample_size(epsilon=eps, delta=delta, log_cardinality=5.0)
            assert diff <= 1
            if eps == delta:
                assert got == want


# 2 -------------------------------------------------------------------------

def _oracle(rng, n_records, n_signs, interior):
    signs = tuple(SignDef(f"s{j}", range(1, 10), float(rng.uniform(0.5, 2.0)))
                  for j in range(n_signs))
    lo, hi = (5, 6) if interior else (1, 10)
    vals = rng.integers(lo, hi, size=(n_records, n_signs))
    return Oracle.from_arrays(SignSchema(signs), vals, rng.random(n_records) < 0.5)


def test_2_world_count_law():
    with criterion(2, "|W| = |P|*2^|S| and each world changes exactly one record", 10.0):
        rng = np.random.default_rng(0)
        for n, s in itertools.product(range(1, 9), range(1, 5)):
            for interior in (True, False):
                o = _oracle(rng, n, s, interior)
                worlds = list(enumerate_worlds(o))
                assert len(worlds) == n * 2 ** s
                for w, world in worlds:
                    changed = [i for i, (a, b) in enumerate(zip(o.records, world.records))
                               if a != b]
                    assert set(changed) <= {w.record_index}
                    for a, b in zip(o.records, world.records):
                        assert a.label == b.label
                    if interior:
                        # sigma >= 0.5 on unit spacing away from the bounds
                        # moves every sign, so exactly one record differs
                        assert changed == [w.record_index]


# 3 -------------------------------------------------------------------------

def test_3_fusion_algebra():
    with criterion(3, "fusion algebra over 10^4+ random tallies and sigma=0 collapse"):
        rng = np.random.default_rng(3)
        cases = 0
        for _ in range(12_000):
            k = int(rng.integers(1, 60))
            preds = list(rng.random(k) < rng.random())
            pos = sum(preds)
            alarm = bool(rng.random() < 0.5)

            c = fuse(preds, "cautious")
            if pos in (0, k):
                assert not c.abstained and c.label == (pos == k) and c.confidence == 1.0
            else:
                assert c.abstained

            a = fuse(preds, "asymmetric", alarm_label=alarm)
            hits = sum(p == alarm for p in preds)
            assert a.label == (alarm if hits else (not alarm))

            v = fuse(preds, "voting")
            assert 0.5 <= v.confidence <= 1.0
            if 2 * pos != k:
                assert v.label == (2 * pos > k)
                assert v.confidence == max(pos, k - pos) / k
            else:
                assert v.abstained
            cases += 1
        assert cases >= 10_000

        # zero drift: every world is the single classifier
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            schema = SignSchema((SignDef("a", range(1, 6), 0.0),
                                 SignDef("b", range(1, 6), 0.0)))
            vals = rng.integers(1, 6, size=(8, 2))
            labels = np.arange(8) % 2 == 0
            o = Oracle.from_arrays(schema, vals, labels)
            single = train_classifier(o, seed=seed)
            ens = train_ensemble(o, seed=seed)
            grid = schema.all_tuples()
            want = single.predict_many(grid)
            assert np.array_equal(ens.predictions(grid), np.tile(want, (len(ens), 1)))
            for patient, expected in zip(map(tuple, grid), want):
                for strategy in ("cautious", "asymmetric", "voting"):
                    d = diagnose(o, patient, strategy=strategy, seed=seed).decision
                    assert d.label == bool(expected) and d.confidence == 1.0


# 4 -------------------------------------------------------------------------

def test_4_pac_empirical():
    with criterion(4, "PAC: >=80% of 50 runs within epsilon=0.2 of the concept", 120.0):
        cfg = parse_config("[population]\nnoise_rate = 0.05\n"
                           "[pac-validate]\nepsilons = 0.2\ndeltas = 0.2\nrepetitions = 50\n")
        rep = pac_validate(cfg, seed=0)
        (row,) = rep.rows
        assert row[2] == min_sample_size(PlanningQuery.for_schema(
            cfg.population.schema, 0.2, 0.2))
        assert row[3] == 50
        print(f"\n  pass_fraction={row[6]:.3f} mean_disagreement={row[4]:.4f}")
        assert row[6] >= 0.8


# 5 -------------------------------------------------------------------------

def test_5_error_claim():
    with criterion(5, "20 runs, n=90, noise 0.10, voting: >=80% with error <= 25%", 300.0):
        cfg = parse_config("[population]\nnoise_rate = 0.10\n"
                           "[error-claim]\nruns = 20\noracle_size = 90\n")
        rep = error_claim(cfg, seed=0, jobs=4)
        assert len(rep.rows) == 20 and not rep.flags
        frac = float(_summary(rep)["pass_fraction"])
        errs = rep.column("population_error")
        print(f"\n  pass_fraction={frac:.3f} error range=[{min(errs):.3f}, {max(errs):.3f}]")
        assert frac >= 0.8


# 6 -------------------------------------------------------------------------

def test_6_kernel_numerics():
    with criterion(6, "kernel symmetry, gaussian Gram PSD, ridge interpolation"):
        rng = np.random.default_rng(6)
        specs = [KernelSpec("linear"), KernelSpec("polynomial", degree=3, offset=1.0),
                 KernelSpec.gaussian(0.25), KernelSpec.gaussian(1.3)]
        for spec in specs:
            X = rng.random((12, 4))
            K = gram(spec, X, X)
            assert np.array_equal(K, K.T)
            for a, b in itertools.combinations(X[:5], 2):
                assert kernel_eval(spec, a, b) == kernel_eval(spec, b, a)
        for _ in range(100):
            X = rng.random((10, 3))
            K = gram(KernelSpec.gaussian(float(rng.uniform(0.05, 2.0))), X, X)
            assert np.linalg.eigvalsh(K).min() >= -1e-8
        for _ in range(20):
            X = rng.random((15, 2))
            t = rng.random(15)
            model = train_regressor(list(zip(map(tuple, X), t)),
                                    KernelSpec.gaussian(0.3), reg=1e-8)
            got = np.array([model.predict(x) for x in X])
            assert np.max(np.abs(got - t)) <= 1e-4


# 7 -------------------------------------------------------------------------

def test_7_drift_smoothness():
    with criterion(7, "1000 ticks at max_step=1 never move a sign index by more than 1"):
        cfg = parse_config("[population]\nsize0 = 500\nmax_step = 1\nbirth_death_scale = 5\n")
        rep, state = simulate(cfg, 1000)
        steps = rep.column("max_index_step")
        assert len(steps) == 1001 and state.tick == 1000
        assert max(steps) == 1


# 8 -------------------------------------------------------------------------

CFG8 = """
[population]
size0 = 300
seed = 11
[pac-validate]
epsilons = 0.3
deltas = 0.3
repetitions = 3
[drift-compare]
oracle_size = 10
gaps = 0 2
[error-claim]
runs = 2
oracle_size = 15
"""


def test_8_determinism(tmp_path, capsys):
    with criterion(8, "identical manifests give byte-identical report bodies"):
        cfg = tmp_path / "c.ini"
        cfg.write_text(CFG8)
        commands = [["reproduce-table1"], ["pac-validate"], ["drift-compare"],
                    ["error-claim"], ["simulate", "--ticks", "20"]]
        for cmd in commands:
            bodies, manifests = [], []
            for rep in range(2):
                out = tmp_path / f"{cmd[0]}-{rep}"
                argv = ["--seed", "7", "--config", str(cfg), "--out", str(out), *cmd]
                jobs = ["--jobs", "2"] if rep else []
                assert main(argv + jobs) == 0
                capsys.readouterr()
                files = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
                bodies.append({f: (out / f).read_bytes() for f in files})
                manifests.append((out / "manifest.json").read_text())
            assert bodies[0] == bodies[1] and bodies[0]


# 9 -------------------------------------------------------------------------

def test_9_therapy_cautious_rule():
    with criterion(9, "therapy rejects non-cautious strategies; sigma=0 matches ranking"):
        schema = SignSchema((SignDef("a", range(1, 6), 0.0), SignDef("b", range(1, 6), 0.0)))
        rng = np.random.default_rng(9)
        for trial in range(20):
            plans = []
            for p in range(3):
                pts = {tuple(int(x) for x in rng.integers(1, 6, 2)) for _ in range(4)}
                plans.append(TherapyPlan(f"p{p}", "",
                                         tuple((pt, float(rng.random())) for pt in sorted(pts))))
            patient = tuple(int(x) for x in rng.integers(1, 6, 2))
            spec = KernelSpec.gaussian(0.25)
            adv = advise(plans, patient, schema, spec, 0.01, seed=trial)
            assert adv.status == "UNANIMOUS"
            assert adv.top_plan == rank_plans(plans, patient, spec, 0.01, schema).top
            for strategy in ("asymmetric", "voting"):
                with pytest.raises(ConfigError):
                    advise(plans, patient, schema, spec, 0.01, strategy=strategy)
