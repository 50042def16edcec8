"""Mini-batch SGD with learning-rate halving on validation plateaus.

The schedule: start at lr 0.1; after each epoch evaluate the validation
metric; when it fails to strictly improve for `patience` consecutive
epochs, halve the learning rate and reset the patience counter; stop once
the learning rate falls below `stop_lr`.  The parameters achieving the best
validation metric are restored at the end.  Runs are fully deterministic
for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..errors import EmptySplit
from .model import EncodedSentence, _ModelBase


@dataclass
class TrainSchedule:
    lr: float = 0.1
    batch_size: int = 32
    patience: int = 4
    halving: float = 0.5
    stop_lr: float = 1e-4
    max_epochs: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    metric: float


@dataclass
class TrainHistory:
    records: List[EpochRecord] = field(default_factory=list)
    best_metric: float = float("-inf")
    best_epoch: int = 0

    @property
    def lr_sequence(self) -> List[float]:
        return [r.lr for r in self.records]


MetricFn = Callable[[_ModelBase, Sequence[EncodedSentence]], float]


def sgd_step(model: _ModelBase, lr: float, scale: float) -> None:
    grads = model.grads()
    for name, p in model.params().items():
        p -= (lr * scale) * grads[name]


def train(
    model: _ModelBase,
    train_data: Sequence[EncodedSentence],
    val_data: Sequence[EncodedSentence],
    schedule: TrainSchedule,
    metric_fn: MetricFn,
) -> TrainHistory:
    """Train in place; returns the per-epoch history.

    Raises EmptySplit when either split is empty.
    """
    if not train_data:
        raise EmptySplit("training split is empty")
    if not val_data:
        raise EmptySplit("validation split is empty")

    rng = np.random.default_rng(schedule.seed)
    history = TrainHistory()
    best_params = model.snapshot()
    lr = schedule.lr
    bad_epochs = 0
    epoch = 0

    while lr >= schedule.stop_lr:
        if schedule.max_epochs is not None and epoch >= schedule.max_epochs:
            break
        epoch += 1
        order = rng.permutation(len(train_data))
        total_loss = 0.0
        for lo in range(0, len(order), schedule.batch_size):
            batch = order[lo : lo + schedule.batch_size]
            model.zero_grads()
            for i in batch:
                total_loss += model.loss_grads(train_data[int(i)])
            sgd_step(model, lr, 1.0)  # batch loss is the sum over sentences
        metric = metric_fn(model, val_data)
        history.records.append(
            EpochRecord(epoch, lr, total_loss / len(train_data), metric)
        )
        if metric > history.best_metric:
            history.best_metric = metric
            history.best_epoch = epoch
            best_params = model.snapshot()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= schedule.patience:
                lr *= schedule.halving
                bad_epochs = 0

    model.load_snapshot(best_params)
    return history
