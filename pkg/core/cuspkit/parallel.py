"""Ordered parallel maps over independent solves and Monte Carlo batches."""
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], n_jobs: int = 1,
                prefer: str = "threads") -> List[R]:
    """Apply ``func`` to every item, returning results in input order.

    ``n_jobs=1`` runs inline; otherwise joblib dispatches the calls (threads by
    default, since the work is numpy/scipy bound and the inputs are immutable).
    """
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with Parallel(n_jobs=n_jobs, prefer=prefer) as parallel:
        return list(parallel(delayed(func)(item) for item in items))


def spawn_generators(seed: Optional[int], count: int) -> Sequence[np.random.Generator]:
    """Independent random streams derived from one seed, so results do not depend on worker count."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]
