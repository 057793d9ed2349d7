from types import SimpleNamespace

import pytest

from stst import SyntheticSpec, TrainConfig, calibrate, generate_synthetic, split, train_linear

# Pinned synthetic benchmark: dim 20, 500/500, separation 4, noise 1. The
# seeds below are frozen so every benchmark-derived number in the suite is a
# deterministic regression value.
BENCH_SPEC = SyntheticSpec(dim=20, n_pos=500, n_neg=500, mean_separation=4.0, noise_std=1.0, seed=3)
BENCH_SPLIT_SEED = 103
BENCH_CAL_SEED = 203
BENCH_TRAIN_CONFIG = TrainConfig(lambda_reg=0.01, epochs=5, seed=303)
BENCH_THETA = 0.0
BENCH_DELTA = 0.1


@pytest.fixture(scope="session")
def synthetic_bench():
    """Train and calibrate the pinned benchmark once per session."""
    full = generate_synthetic(BENCH_SPEC)
    train, test = split(full, 0.3, BENCH_SPLIT_SEED)
    train_core, cal = split(train, 0.25, BENCH_CAL_SEED)
    raw_model = train_linear(train_core, BENCH_TRAIN_CONFIG)
    model, report = calibrate(raw_model, cal, class_used=1)
    return SimpleNamespace(
        train=train_core,
        cal=cal,
        test=test,
        raw_model=raw_model,
        model=model,
        report=report,
    )
