# cli/evaluate.py
import logging
import os

import pandas as pd

from core.network import evaluate

from .checkpoint import load_checkpoint
from .config import RunConfig
from .console import print_csv
from .train import load_datasets

logger = logging.getLogger(__name__)

EVAL_COLUMNS = ["checkpoint", "step", "split", "samples", "loss", "accuracy"]


def run_eval(cfg: RunConfig) -> int:
    """Score a checkpoint on one split and print a single CSV row."""
    cfg.require("checkpoint")
    ckpt = load_checkpoint(cfg.checkpoint)
    train_set, test_set = load_datasets(cfg)
    dataset = test_set if cfg.split == "test" else train_set

    loss, accuracy = evaluate(ckpt.network, dataset, cfg.threads)
    logger.info("%s on %s split: loss %.6f, accuracy %.4f", cfg.checkpoint, cfg.split, loss, accuracy)
    row = pd.DataFrame([{
        "checkpoint": os.path.basename(cfg.checkpoint),
        "step": ckpt.step,
        "split": cfg.split,
        "samples": len(dataset),
        "loss": loss,
        "accuracy": accuracy,
    }], columns=EVAL_COLUMNS)
    print_csv(row)
    return 0
