import copy

import pytest

BASE_CONFIG = {
    "model": {
        "layer_widths": [2, 16, 16, 2],
        "use_bn": True,
        "bn_gamma_init": 1.0,
        "bn_epsilon": 1e-5,
        "bn_stats_decay": 0.9,
        "virtual_batch_size": 32,
        "label_smoothing": 0.0,
        "init_seed": 0,
    },
    "data": {"classes": 2, "features": 2, "per_class": 256, "spread": 0.5, "seed": 7},
    "optimizer": [
        {
            "tags": ["weight", "bias", "bn_scale", "bn_shift"],
            "config": {
                "kind": "nesterov",
                "momentum": 0.9,
                "decay": 1e-4,
                "decay_mode": "l2_into_gradient",
                "exclude_tags": ["bias", "bn_scale", "bn_shift"],
            },
        }
    ],
    "schedule": {"family": "cosine", "eta_peak": 0.4, "total_steps": 200},
    "budget_steps": 200,
    "batch_size": 64,
    "eval_every": 50,
    "base_seed": 0,
    "target_metric": "final_train_accuracy",
    "target_value": 0.99,
}


@pytest.fixture
def base_config():
    return copy.deepcopy(BASE_CONFIG)
