"""Run evaluation: label alignment, detection delay, false positive rate.

Predicted labels are arbitrary integers, so accuracy is scored under
the best injective label-to-task assignment (rectangular Hungarian);
renaming labels never changes the score.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .seeding import child_seed

__all__ = [
    "optimal_label_map",
    "label_alignment_accuracy",
    "detection_delay",
    "run_included_mask",
    "false_positive_rate",
]


def _checked(pred, gt, include) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p = np.asarray(pred)
    g = np.asarray(gt)
    if p.ndim != 1 or g.ndim != 1 or p.shape != g.shape:
        raise ValueError("pred and gt must be 1D sequences of equal length")
    if p.shape[0] == 0:
        raise ValueError("empty sequences")
    if include is None:
        m = np.ones(p.shape[0], dtype=bool)
    else:
        m = np.asarray(include, dtype=bool)
        if m.shape != p.shape:
            raise ValueError("include mask must match sequence length")
    return p, g, m


def _confusion(pred, gt, include):
    p, g, m = _checked(pred, gt, include)
    p, g = p[m], g[m]
    labels = np.unique(p)
    tasks = np.unique(g)
    counts = np.zeros((labels.shape[0], tasks.shape[0]), dtype=int)
    li = {v: i for i, v in enumerate(labels)}
    ti = {v: i for i, v in enumerate(tasks)}
    for a, b in zip(p, g):
        counts[li[a], ti[b]] += 1
    return labels, tasks, counts, int(p.shape[0])


def optimal_label_map(pred, gt, include=None) -> dict[int, int]:
    """Best injective assignment of labels to tasks by step agreement.

    Labels left unassigned (when labels outnumber tasks) are omitted
    from the returned dict.
    """
    labels, tasks, counts, total = _confusion(pred, gt, include)
    if total == 0:
        return {}
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return {int(labels[r]): int(tasks[c]) for r, c in zip(rows, cols)}


def label_alignment_accuracy(pred, gt, include=None) -> float:
    """Fraction of (included) steps matched under the best injective map."""
    labels, tasks, counts, total = _confusion(pred, gt, include)
    if total == 0:
        raise ValueError("no included steps to score")
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return float(counts[rows, cols].sum() / total)


def detection_delay(trace) -> list[float]:
    """Steps from each ground-truth change to the next label change.

    ``trace`` is a sequence of records with t, gt_task and pred_label
    attributes. A change never answered by a label change yields
    ``inf``.
    """
    rows = list(trace)
    if not rows:
        raise ValueError("empty trace")
    gt_changes = [
        rows[i].t for i in range(1, len(rows)) if rows[i].gt_task != rows[i - 1].gt_task
    ]
    pred_changes = [
        rows[i].t for i in range(1, len(rows)) if rows[i].pred_label != rows[i - 1].pred_label
    ]
    delays: list[float] = []
    for tc in gt_changes:
        answered = [tp for tp in pred_changes if tp >= tc]
        delays.append(float(answered[0] - tc) if answered else float("inf"))
    return delays


def run_included_mask(trace, events, stable_phase: int) -> np.ndarray:
    """Steps that count toward alignment: no probe steps, no stable phase.

    The stable phase restarts at 0 and at every new-task event, exactly
    mirroring the detector's suppression window.
    """
    rows = list(trace)
    changes = [0] + sorted(ev.t for ev in events if ev.kind == "new-task")
    mask = np.empty(len(rows), dtype=bool)
    ci = 0
    for i, row in enumerate(rows):
        while ci + 1 < len(changes) and changes[ci + 1] <= row.t:
            ci += 1
        in_stable = (row.t - changes[ci]) < stable_phase
        mask[i] = not row.probe_flag and not in_stable
    return mask


def false_positive_rate(config, n_runs: int, seed: int) -> float:
    """Fraction of stationary runs that raise any detection event.

    Each run uses a seed derived from ``seed`` and the run index; the
    config should hold a single-task curriculum so every event is
    spurious by construction.
    """
    from dataclasses import replace

    from .runner import run_experiment

    if n_runs < 0:
        raise ValueError(f"n_runs must be >= 0, got {n_runs}")
    if n_runs == 0:
        return 0.0
    positives = 0
    for i in range(n_runs):
        cfg = replace(config, master_seed=child_seed(seed, f"fpr-run-{i}"))
        result = run_experiment(cfg)
        if result.events:
            positives += 1
    return positives / n_runs
