"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criterion 1 runs at full benchmark scale (6,400 training vectors of
dimension 200), so this module takes a few minutes; everything else is
desk-scale. The global-vs-local comparison shares one reduced DE budget
(frontier 10, cf 0.3, f 0.75, lives 10) across both modes so the timing
ratio is like-for-like while the suite stays in the minutes range; the
parallel-vs-sequential comparison uses the full default budget (lives 60)
because per-cluster tuning has to dominate the serial cluster-count search
for a width-8 pool to halve the total. The parallel criterion needs 8
usable cores to be satisfiable at all; on smaller hosts it reports the
measured ratio and fails honestly.
"""

import itertools
import math
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from localtune.classifiers import KnnConfig, SvmConfig, knn_fit, svm_fit
from localtune.cli import main as cli_main
from localtune.clustering import gap_statistic
from localtune.dataset import (load_dataset, stratified_folds, synthetic_blobs)
from localtune.evaluation import (cliffs_delta, class_names, format_paper_table,
                                  macro_f1, metrics, scott_knott)
from localtune.locallearn import PipelineConfig, fit_pipeline, predict_pipeline
from localtune.tuner import (Candidate, DeSettings, Param, ParamSpace,
                             de_optimize, tune_learner, tuning_split)

from conftest import make_dataset, separable_2d, xor_dataset

SHARED_DE_BUDGET = DeSettings(n=10, cf=0.3, f=0.75, lives=10)


def announce(criterion: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} -- {detail}")
    assert ok, f"{criterion}: {detail}"


# --- criterion 1: local-vs-global training-time and F1 at benchmark scale ----

@pytest.fixture(scope="module")
def bench_data(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("bench")
    path = tmp / "synthetic.csv"
    rc = cli_main(["synth", "--n", "8000", "--dim", "200", "--classes", "4",
                   "--blobs", "13", "--sigma", "0.05", "--seed", "7",
                   "--out", str(path)])
    assert rc == 0
    data = load_dataset(path)
    train, test = next(stratified_folds(data, folds=5, repeats=1, seed=1))
    assert len(train) == 6400 and len(test) == 1600 and train.d == 200
    return train, test


@pytest.fixture(scope="module")
def benchmark_runs(bench_data):
    train, test = bench_data
    global_cfg = PipelineConfig("DE_SVM", seed=3, de=SHARED_DE_BUDGET)
    local_cfg = PipelineConfig("KMeans_DE_SVM", seed=3, de=SHARED_DE_BUDGET)
    return {"test": test,
            "global": fit_pipeline(train, global_cfg),
            "local": fit_pipeline(train, local_cfg)}


@pytest.fixture(scope="module")
def parallel_runs(bench_data):
    # full default DE budget: per-cluster tuning has to dominate the serial
    # cluster-count search for a worker pool to halve the total
    train, _ = bench_data
    cfg = PipelineConfig("KMeans_DE_SVM", seed=3, de=DeSettings())
    return {"sequential": fit_pipeline(train, cfg),
            "parallel": fit_pipeline(train, replace(cfg, n_jobs=8))}


def test_criterion_1a_sequential_speedup(benchmark_runs):
    t_global = benchmark_runs["global"].timing.total
    t_local = benchmark_runs["local"].timing.total
    ok = t_local <= 0.5 * t_global
    announce("criterion 1a (sequential KMeans_DE_SVM <= 0.5x DE_SVM)", ok,
             f"local {t_local:.1f}s vs global {t_global:.1f}s "
             f"(ratio {t_local / t_global:.3f})")


def test_criterion_1b_f1_within_3_points(benchmark_runs):
    test = benchmark_runs["test"]
    f1_global = macro_f1(test.y, predict_pipeline(benchmark_runs["global"], test), 4)
    f1_local = macro_f1(test.y, predict_pipeline(benchmark_runs["local"], test), 4)
    ok = abs(f1_local - f1_global) <= 0.03
    announce("criterion 1b (macro F1 within 3 points)", ok,
             f"local {100 * f1_local:.1f} vs global {100 * f1_global:.1f}")


def test_criterion_1c_parallel_speedup(parallel_runs):
    k = parallel_runs["sequential"].k
    t_seq = parallel_runs["sequential"].timing.total
    t_par = parallel_runs["parallel"].timing.total
    assert k >= 8, f"precondition k >= 8 not met (k={k})"
    ok = t_par <= 0.5 * t_seq
    announce("criterion 1c (width-8 pool <= 0.5x sequential, k >= 8)", ok,
             f"k={k}, parallel {t_par:.1f}s vs sequential {t_seq:.1f}s "
             f"(ratio {t_par / t_seq:.3f})")


# --- criterion 2: gap statistic on three well-separated blobs ----------------

def test_criterion_2_gap_selects_three_blobs():
    sigma = 0.1
    sep = 10 * sigma
    centers = np.array([[0.0, 0.0], [sep, 0.0], [sep / 2, sep * math.sqrt(3) / 2]])
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng([seed])
        X = np.vstack([c + sigma * rng.normal(size=(60, 2)) for c in centers])
        res = gap_statistic(X, k_min=1, k_max=8, nrefs=3, seed=seed)
        hits += res.chosen_k == 3
    announce("criterion 2 (gap statistic finds k=3 in >= 16/20 runs)",
             hits >= 16, f"{hits}/20 runs chose k=3")


# --- criterion 3: classifier oracles ------------------------------------------

def knn_oracle(train_X, train_y, q, k, weights):
    dists = sorted((math.dist(q, train_X[t]), t) for t in range(len(train_X)))
    top = dists[:k]
    if weights == "distance" and any(d == 0.0 for d, _ in top):
        votes = Counter(int(train_y[t]) for d, t in top if d == 0.0)
    elif weights == "distance":
        votes = Counter()
        for d, t in top:
            votes[int(train_y[t])] += 1.0 / d
    else:
        votes = Counter(int(train_y[t]) for _, t in top)
    best = max(votes.values())
    return min(c for c, v in votes.items() if v == best)


def test_criterion_3_classifier_oracles():
    rng = np.random.default_rng(99)
    mismatches = 0
    total = 0
    for weights in ("uniform", "distance"):
        for block in range(5):
            n = int(rng.integers(30, 200))
            X = rng.normal(size=(n, 4))
            y = rng.integers(1, 5, size=n)
            ds = make_dataset(X, y, 4)
            k = int(rng.integers(1, 11))
            model = knn_fit(ds, KnnConfig(n_neighbors=min(k, n), weights=weights))
            queries = rng.normal(size=(100, 4))
            got = model.predict(queries)
            for qi in range(100):
                total += 1
                want = knn_oracle(X, y, queries[qi], min(k, n), weights)
                mismatches += got[qi] != want
    knn_ok = mismatches == 0 and total == 1000
    svm_ok = True
    details = []
    for seed in range(10):
        sep = separable_2d(n_per_class=25, gap=8.0, seed=seed)
        m = svm_fit(sep, SvmConfig(kernel="linear", C=1.0))
        acc_sep = (m.predict(sep.X) == sep.y).mean()
        xor = xor_dataset(n_per_corner=20, jitter=0.08, seed=seed)
        m = svm_fit(xor, SvmConfig(kernel="rbf", gamma=1.0))
        acc_xor = (m.predict(xor.X) == xor.y).mean()
        if acc_sep < 1.0 or acc_xor < 0.95:
            svm_ok = False
            details.append(f"seed {seed}: sep {acc_sep:.3f} xor {acc_xor:.3f}")
    announce("criterion 3 (KNN oracle 1000/1000; SVM separable and XOR)",
             knn_ok and svm_ok,
             f"KNN mismatches {mismatches}/{total}; "
             + ("all 10 SVM seeds ok" if svm_ok else "; ".join(details)))


# --- criterion 4: DE on the sphere objective ----------------------------------

def test_criterion_4_de_sphere():
    space = ParamSpace(tuple(Param(f"x{i}", "continuous", -5.0, 5.0)
                             for i in range(3)))
    evaluations = []

    def objective(cand: Candidate) -> float:
        score = -sum(cand.decoded[f"x{i}"] ** 2 for i in range(3))
        evaluations.append(score)
        return score

    settings = DeSettings(n=10, cf=0.3, f=0.75, lives=60)
    best = de_optimize(space, objective, settings, seed=17)
    initial_best = max(evaluations[:settings.n])
    dist = math.sqrt(-best.score)
    ok = dist <= 0.1 and best.score >= initial_best
    announce("criterion 4 (DE sphere within 0.1 of optimum; elitism exact)",
             ok, f"|x|={dist:.4f}, best {best.score:.6f} vs initial frontier "
                 f"best {initial_best:.6f}")


# --- criterion 5: tuned config never worse than default on the tuning split ---

def test_criterion_5_tuning_guarantee():
    failures = []
    runs = 0
    for seed in range(4):
        data = synthetic_blobs(120, 4, 3, 3, sigma=0.35, seed=seed,
                               class_sep=2.0)
        for learner in ("svm", "knn"):
            runs += 1
            res = tune_learner(data, learner, DeSettings(n=6, lives=3),
                               seed=seed)
            fit_idx, tune_idx = tuning_split(data, seed=seed)
            fit_ds, tune_ds = data.subset(fit_idx), data.subset(tune_idx)
            fit = svm_fit if learner == "svm" else knn_fit
            default = SvmConfig() if learner == "svm" else KnnConfig()
            f1_tuned = macro_f1(tune_ds.y, fit(fit_ds, res.config).predict(tune_ds.X), 3)
            f1_default = macro_f1(tune_ds.y, fit(fit_ds, default).predict(tune_ds.X), 3)
            if not f1_tuned >= f1_default:
                failures.append(f"{learner} seed {seed}: {f1_tuned} < {f1_default}")
    announce("criterion 5 (tuned >= default on tuning split, exact)",
             not failures, f"{runs} runs" if not failures else "; ".join(failures))


# --- criterion 6: metrics and the report format -------------------------------

def test_criterion_6_metrics_and_table():
    m = metrics(np.array([[8, 2], [3, 7]]))
    p1, r1 = 8 / 11, 8 / 10
    f1_1 = 2 * r1 * p1 / (p1 + r1)
    p2, r2 = 7 / 9, 7 / 10
    f1_2 = 2 * r2 * p2 / (p2 + r2)
    hand_ok = (abs(m.precision[0] - p1) <= 1e-9 and abs(m.recall[0] - r1) <= 1e-9
               and abs(m.f1[0] - f1_1) <= 1e-9 and abs(m.precision[1] - p2) <= 1e-9
               and abs(m.recall[1] - r2) <= 1e-9 and abs(m.f1[1] - f1_2) <= 1e-9
               and abs(m.macro_f1 - (f1_1 + f1_2) / 2) <= 1e-9)
    diag = metrics(np.diag([4, 6, 2]))
    diag_ok = (diag.f1 == 1.0).all() and diag.macro_f1 == 1.0

    data = synthetic_blobs(160, 3, 4, 4, sigma=0.05, seed=5, blob_classes="one")
    from localtune.evaluation import run_experiment
    (report,) = run_experiment(data, [PipelineConfig("KNN")], folds=4,
                               repeats=1, seed=6)
    table = format_paper_table(report)
    lines = table.strip().splitlines()
    body = lines[1:]
    names = class_names(4)
    structure_ok = (len(body) == 5 and body[-1].startswith("Overall")
                    and all(body[i].startswith(names[i]) for i in range(4))
                    and all(v.isdigit() and 0 <= int(v) <= 100
                            for ln in body for v in ln.split()[-3:]))
    announce("criterion 6 (hand-computed metrics to 1e-9; table structure)",
             hand_ok and diag_ok and structure_ok,
             f"hand={hand_ok} diagonal={diag_ok} table={structure_ok}")


# --- criterion 7: statistics ---------------------------------------------------

def test_criterion_7_statistics():
    ranks = scott_knott({"A": [0.90, 0.91, 0.92], "B": [0.50, 0.51, 0.52]},
                        seed=11)
    disjoint_ok = ranks["A"] == 1 and ranks["B"] == 2
    same = scott_knott({"A": [0.7, 0.71, 0.72], "B": [0.7, 0.71, 0.72]}, seed=11)
    identical_ok = same["A"] == same["B"]
    det_ok = scott_knott({"A": [0.9, 0.8], "B": [0.5, 0.6], "C": [0.55, 0.62]},
                         seed=12) == \
        scott_knott({"A": [0.9, 0.8], "B": [0.5, 0.6], "C": [0.55, 0.62]},
                    seed=12)
    rng = np.random.default_rng(13)
    delta_ok = True
    for _ in range(60):
        xs = rng.integers(-5, 6, size=int(rng.integers(1, 21)))
        ys = rng.integers(-5, 6, size=int(rng.integers(1, 21)))
        want = sum(int(a > b) - int(a < b)
                   for a, b in itertools.product(xs, ys)) / (len(xs) * len(ys))
        if cliffs_delta(xs, ys) != want:
            delta_ok = False
            break
    announce("criterion 7 (Scott-Knott split/merge; Cliff's delta exact)",
             disjoint_ok and identical_ok and det_ok and delta_ok,
             f"disjoint={disjoint_ok} identical={identical_ok} "
             f"deterministic={det_ok} delta={delta_ok}")


# --- criterion 8: k=1 mode reduction -------------------------------------------

def test_criterion_8_mode_reduction():
    train = synthetic_blobs(600, 10, 3, 3, sigma=0.3, seed=21, class_sep=2.0)
    test = synthetic_blobs(300, 10, 3, 3, sigma=0.4, seed=22, class_sep=2.0)
    local = fit_pipeline(train, PipelineConfig("KMeans_SVM", seed=4, fixed_k=1))
    glob = fit_pipeline(train, PipelineConfig("SVM", seed=4))
    p_local = predict_pipeline(local, test)
    p_global = predict_pipeline(glob, test)
    equal = int((p_local == p_global).sum())
    ok = equal == len(test)
    announce("criterion 8 (KMeans_SVM with k=1 == global SVM, exact)", ok,
             f"{equal}/{len(test)} identical predictions")
