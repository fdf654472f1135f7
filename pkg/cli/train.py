# cli/train.py
import logging
import os

import pandas as pd

from core.data import find_mnist_files, load_binary_mnist
from core.network import LOG_COLUMNS, AdamState, build_paper_network, train

from .checkpoint import load_architecture, load_checkpoint, save_checkpoint
from .config import RunConfig
from .console import write_csv

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
FINAL_CHECKPOINT = "checkpoint_final.json"


def load_datasets(cfg: RunConfig):
    """(train, test) 0/1 subsets, truncated by --limit-train / --limit-test when set."""
    cfg.require("data_dir")
    paths = find_mnist_files(cfg.data_dir)
    train_set, test_set = load_binary_mnist(
        paths["train_images"], paths["train_labels"], paths["test_images"], paths["test_labels"],
        angle_scale=cfg.angle_scale,
    )
    if cfg.limit_train:
        train_set = train_set.head(cfg.limit_train)
    if cfg.limit_test:
        test_set = test_set.head(cfg.limit_test)
    return train_set, test_set


def _previous_rows(metrics_path, step: int) -> pd.DataFrame:
    # rows already logged up to the resumed step
    if not os.path.exists(metrics_path):
        return pd.DataFrame(columns=LOG_COLUMNS)
    old = pd.read_csv(metrics_path)
    return old[old["iteration"] <= step]


def _with_history(history: pd.DataFrame | None, log: pd.DataFrame) -> pd.DataFrame:
    if history is None or history.empty:
        return log
    return pd.concat([history, log], ignore_index=True)


def run_train(cfg: RunConfig) -> int:
    train_set, test_set = load_datasets(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    metrics_path = os.path.join(cfg.out_dir, METRICS_FILE)

    optimizer, history = None, None
    if cfg.resume:
        ckpt = load_checkpoint(cfg.resume)
        net, optimizer = ckpt.network, ckpt.optimizer
        if optimizer is None:
            logger.warning("%s carries no optimizer state; starting fresh Adam moments from its parameters", cfg.resume)
            optimizer = AdamState(lr_schedule=cfg.lr_schedule())
        else:
            if optimizer.lr_schedule != cfg.lr_schedule():
                logger.warning("keeping the learning-rate schedule %s stored in %s; --eta/--eta2/--switch-at "
                               "ask for %s", optimizer.lr_schedule, cfg.resume, cfg.lr_schedule())
            history = _previous_rows(metrics_path, optimizer.step)
            logger.info("resuming from %s at step %d", cfg.resume, optimizer.step)
    elif cfg.architecture == "paper":
        net = build_paper_network()
    else:
        net = load_architecture(cfg.architecture)
    logger.info("training %r on %d samples, testing on %d", net, len(train_set), len(test_set))

    def checkpoint_at_cadence(iteration, network, opt, log):
        if cfg.checkpoint_every > 0 and iteration % cfg.checkpoint_every == 0:
            save_checkpoint(os.path.join(cfg.out_dir, f"checkpoint_{iteration:05d}.json"), network, iteration, opt)
            write_csv(_with_history(history, log), metrics_path)

    result = train(net, train_set, cfg.train_config(), test_set, optimizer, checkpoint_at_cadence)
    log = _with_history(history, result.log)
    write_csv(log, metrics_path)
    save_checkpoint(os.path.join(cfg.out_dir, FINAL_CHECKPOINT), result.network, result.optimizer.step,
                    result.optimizer)

    final = log.dropna(subset=["test_accuracy"]).tail(1)
    if final.empty:
        print("no test evaluation was run")
    else:
        row = final.iloc[0]
        print(f"final test accuracy {row['test_accuracy']:.4f} "
              f"(test loss {row['test_loss']:.6f}) after {int(row['iteration'])} iterations")
    return 0
