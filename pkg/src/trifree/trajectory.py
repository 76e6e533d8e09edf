"""Deterministic reference curves for the process and empirical checkpoints.

While the graph is sparse, the open-pair count and the partial-vertex
counts of individual pairs track smooth functions of the scaled time
t = i / n^(3/2):

    open pairs        Q(i)      ~  n^2 * exp(-4 t^2) / 2
    partial vertices  |Y_{u,v}| ~  sqrt(n) * 4 t * exp(-4 t^2)

up to the step horizon m = (1/32) * n^(3/2) * sqrt(ln n).  The formal
deviation envelope exp(41 t^2 + 40 t) * n^(-1/6) is meaningful only for
astronomically large n; checkpoints therefore evaluate the formal bounds
(flagging the vacuous regime where the envelope exceeds the curve
itself) and, separately, plain relative residuals that are the useful
measurement at simulation scale.
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass
from functools import cached_property
from statistics import fmean
from typing import Callable

from .process import ProcessState

HORIZON_COEFFICIENT = 1.0 / 32.0  # fixed constant in the tracking horizon

# exp() overflows doubles just above this; envelopes saturate to inf there
_EXP_MAX = 709.0


def scaled_time(i: int, n: int) -> float:
    """t(i) = i / n^(3/2)."""
    if i < 0 or n < 1:
        raise ValueError("need i >= 0 and n >= 1")
    return i / n**1.5


def open_pair_curve(t: float) -> float:
    """Predicted open pairs per n^2: exp(-4 t^2) / 2."""
    return math.exp(-4.0 * t * t) / 2.0


def partial_vertex_curve(t: float) -> float:
    """Predicted partial-vertex count per sqrt(n): 4 t exp(-4 t^2)."""
    return 4.0 * t * math.exp(-4.0 * t * t)


def _envelope_log(t: float, n: int) -> float:
    return 41.0 * t * t + 40.0 * t - math.log(n) / 6.0


def _exp_or_inf(x: float) -> float:
    return math.exp(x) if x < _EXP_MAX else math.inf


def log_open_pair_envelope(t: float, n: int) -> float:
    """log of the open-pair envelope; the branch above t=1 divides by t."""
    lv = _envelope_log(t, n)
    if t > 1.0:
        lv -= math.log(t)
    return lv


def open_pair_envelope(t: float, n: int) -> float:
    """Deviation envelope for Q / n^2 (saturates to inf for large t)."""
    return _exp_or_inf(log_open_pair_envelope(t, n))


def partial_vertex_envelope(t: float, n: int) -> float:
    """Deviation envelope for |Y| / sqrt(n)."""
    return _exp_or_inf(_envelope_log(t, n))


def envelope_vacuous(t: float, n: int) -> bool:
    """True when the envelope is at least the curve itself.

    Compared in log space, so it stays correct where exp() overflows.
    A formal bound that holds in this regime says nothing.
    """
    log_curve = -4.0 * t * t - math.log(2.0)
    return log_open_pair_envelope(t, n) >= log_curve


def step_horizon(
    n: int,
    coefficient: float = HORIZON_COEFFICIENT,
    log: Callable[[float], float] = math.log,
) -> int:
    """floor(coefficient * n^(3/2) * sqrt(log n)).

    Natural log by default; pass e.g. math.log2 to rebase.  Tiny n can
    yield an empty horizon, which is reported with a warning.
    """
    if n < 2:
        raise ValueError(f"horizon needs n >= 2 (log 1 = 0), got n={n}")
    horizon = int(coefficient * n**1.5 * math.sqrt(log(n)))
    if horizon == 0:
        warnings.warn(
            f"step horizon is empty at n={n}; trajectory checks need larger n",
            stacklevel=2,
        )
    return horizon


@dataclass(frozen=True)
class TrajectoryParams:
    """Vertex count plus the derived tracking horizon."""

    n: int
    coefficient: float = HORIZON_COEFFICIENT

    @cached_property
    def horizon(self) -> int:
        return step_horizon(self.n, self.coefficient)

    @property
    def horizon_time(self) -> float:
        return scaled_time(self.horizon, self.n)


@dataclass(frozen=True)
class Checkpoint:
    """Observed vs. predicted open-pair and partial-vertex counts at one step.

    rel_y and the y aggregates are None when there was nothing to sample
    (saturated state) or the prediction is zero (t = 0).  formal_* flags
    evaluate the deviation envelopes; env_vacuous marks the regime where
    the open-pair envelope exceeds the curve and the formal check is
    uninformative.
    """

    step: int
    t: float
    open_pairs: int
    q_pred: float
    q_env: float
    rel_q: float
    y_samples: tuple[int, ...]
    y_mean: float | None
    y_pred: float
    y_env: float
    rel_y: float | None
    formal_q_ok: bool
    formal_y_ok: bool | None
    env_vacuous: bool


CHECKPOINT_COLUMNS = (
    "step",
    "t",
    "Q",
    "q_pred",
    "q_env",
    "rel_q",
    "y_mean",
    "y_pred",
    "y_env",
    "rel_y",
    "formal_q_ok",
    "formal_y_ok",
    "env_vacuous",
)


def checkpoint_row(cp: Checkpoint) -> list[str]:
    """Render a checkpoint as CSV fields in CHECKPOINT_COLUMNS order."""

    def fmt(value: object) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        return repr(value) if isinstance(value, float) else str(value)

    return [
        fmt(cp.step),
        fmt(cp.t),
        fmt(cp.open_pairs),
        fmt(cp.q_pred),
        fmt(cp.q_env),
        fmt(cp.rel_q),
        fmt(cp.y_mean),
        fmt(cp.y_pred),
        fmt(cp.y_env),
        fmt(cp.rel_y),
        fmt(cp.formal_q_ok),
        fmt(cp.formal_y_ok),
        fmt(cp.env_vacuous),
    ]


def take_checkpoint(
    state: ProcessState,
    params: TrajectoryParams,
    y_sample_count: int = 200,
    rng: random.Random | None = None,
) -> Checkpoint:
    """Compare the live state against the reference curves.

    Reads Q directly, samples `y_sample_count` open pairs uniformly and
    measures each pair's partial-vertex count.  The sampling RNG is
    independent of the process stream.  Checkpoints past the horizon are
    allowed; there the curves are extrapolations and the formal flags
    are informational only.
    """
    if state.n != params.n:
        raise ValueError(f"state has n={state.n} but params have n={params.n}")
    if rng is None:
        rng = random.Random(0xC4EC)
    n = params.n
    i = state.steps
    t = scaled_time(i, n)
    q_obs = state.open_pairs

    q_pred = n * n * open_pair_curve(t)
    q_env = n * n * open_pair_envelope(t, n)
    rel_q = abs(q_obs / q_pred - 1.0) if q_pred > 0.0 else math.inf
    formal_q_ok = abs(q_obs - q_pred) <= q_env

    pairs = state.sample_open_pairs(y_sample_count, rng)
    y_samples = tuple(len(state.partial_set(u, v)) for u, v in pairs)
    y_pred = math.sqrt(n) * partial_vertex_curve(t)
    y_env = math.sqrt(n) * partial_vertex_envelope(t, n)
    if y_samples:
        y_mean: float | None = fmean(y_samples)
        formal_y_ok: bool | None = all(abs(s - y_pred) <= y_env for s in y_samples)
        rel_y = abs(y_mean / y_pred - 1.0) if y_pred > 0.0 else None
    else:
        y_mean = None
        formal_y_ok = None
        rel_y = None

    return Checkpoint(
        step=i,
        t=t,
        open_pairs=q_obs,
        q_pred=q_pred,
        q_env=q_env,
        rel_q=rel_q,
        y_samples=y_samples,
        y_mean=y_mean,
        y_pred=y_pred,
        y_env=y_env,
        rel_y=rel_y,
        formal_q_ok=formal_q_ok,
        formal_y_ok=formal_y_ok,
        env_vacuous=envelope_vacuous(t, n),
    )


def default_cadence(horizon: int) -> int:
    """Checkpoint every ceil(horizon / 50) steps (at least every step)."""
    return max(1, math.ceil(horizon / 50))


def grid_times(spacing: float = 0.2, max_t: float = 3.0) -> list[float]:
    """The scaled-time grid 0.2, 0.4, ... used for cross-run comparisons."""
    count = int(round(max_t / spacing))
    return [round(k * spacing, 10) for k in range(1, count + 1)]


def grid_steps(n: int, times: list[float] | None = None) -> dict[int, float]:
    """Map each grid time to its nearest step index (dropping step 0)."""
    if times is None:
        times = grid_times()
    out: dict[int, float] = {}
    for t in times:
        step = round(t * n**1.5)
        if step >= 1 and step not in out:
            out[step] = t
    return out
