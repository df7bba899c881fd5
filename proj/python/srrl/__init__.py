"""Self-rewarding rubric-based RL: Python front end to the C++ core.

Tasks, configs and step reports are plain dicts/lists shaped like the JSONL
records the CLI writes.
"""

import json

from ._srrl import (
    ConfigError,
    InputError,
    NumericError,
    Policy,
    config_keys,
    default_output_dir,
    group_advantages,
    grpo_objective,
    version,
    vocabulary,
    write_report_curves,
)
from . import _srrl

__all__ = [
    "ConfigError", "InputError", "NumericError", "Policy",
    "config_keys", "default_config", "default_output_dir", "evaluate",
    "generate_tasks", "grade_oracle", "group_advantages", "grpo_objective",
    "load_tasks", "macro_f1", "reward_score", "save_tasks", "sft", "train",
    "version", "vocabulary", "write_report_curves",
]


def generate_tasks(family="contains", count=32, seed=0):
    return json.loads(_srrl._generate_tasks(family, count, seed))


def load_tasks(path):
    return json.loads(_srrl._load_tasks(path))


def save_tasks(path, tasks):
    _srrl._save_tasks(path, json.dumps(tasks))


def reward_score(task, met):
    """Score from one met flag per rubric of `task`, in rubric order."""
    return _srrl._reward_score(json.dumps(task), list(met))


def grade_oracle(task, response):
    return _srrl._grade_oracle(json.dumps(task), list(response))


def macro_f1(predictions, labels):
    return json.loads(_srrl._macro_f1(list(predictions), list(labels)))


def default_config():
    return json.loads(_srrl._default_config())


def _merged(overrides):
    cfg = default_config()
    for section, values in (overrides or {}).items():
        if section not in cfg:
            raise ConfigError("unknown config section: " + section)
        cfg[section].update(values)
    return json.dumps(cfg)


def train(out_dir, config=None):
    """Runs `srrl train` in-process. Returns (policy, step reports)."""
    params, reports = _srrl._run_train(_merged(config), str(out_dir))
    return params, json.loads(reports)


def sft(out_dir, config=None):
    """Runs `srrl sft` in-process. Returns (policy, per-step losses)."""
    return _srrl._run_sft(_merged(config), str(out_dir))


def evaluate(policy, tasks, samples=8, seed=0, temperature=1.0, max_response_length=8):
    """Oracle-scored mean reward. Returns (mean, per-task scores)."""
    return _srrl._evaluate(policy, json.dumps(tasks), samples, seed, temperature, max_response_length)
