"""End-to-end estimation runs: schedules, execution, and query accounting.

A schedule fixes, for every resolution step ``k``, the split of the signal
multiplier ``2^(k-1) = P_k T_k S_k`` into parallel branches, shifter
strength, and sequential repetitions, together with shot counts ``nu_k``
and query lengths ``L_k``.  ``run`` executes the two measurement settings
of every step on the selected backend, feeds the frequencies through the
phase recovery, and reports the exact query count
``N = 2 sum_k nu_k P_k S_k L_k`` alongside depth and width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import circuit as circ
from . import qsp, rpe
from .core_model import AmplitudeInstance, DomainError

# Calibrated per-step query lengths for T=1 parallel runs that keep the
# measured probability bias of each setting at or below 0.05 (steps 1..9).
PARALLEL_L_TABLE_PLUS = (10, 12, 12, 14, 16, 16, 18, 20, 20)
PARALLEL_L_TABLE_PLUS_I = (12, 14, 14, 14, 16, 16, 18, 20, 20)

_BACKENDS = ("analytic", "statevector", "ideal")


class ConfigurationError(ValueError):
    """Raised for invalid schedule or strategy parameters."""


@dataclass(frozen=True)
class ScheduleStep:
    k: int
    m: int          # signal multiplier 2^(k-1)
    p: int          # parallel branches
    t: float        # shifter strength
    s: int          # sequential repetitions
    nu: int         # shots per setting
    l: int          # queries per shifter application


@dataclass(frozen=True)
class Schedule:
    steps: tuple[ScheduleStep, ...]
    strategy: str
    K: int

    def __iter__(self):
        return iter(self.steps)


@dataclass(frozen=True)
class MeasurementRecord:
    """Raw per-step counts feeding the phase recovery."""

    k: int
    h_plus: int
    h_i: int
    nu: int


@dataclass(frozen=True)
class ResourceReport:
    n_queries: int       # total oracle calls, both settings included
    oracle_depth: int    # max_k S_k * L_k sequential oracle calls
    ghz_layers: int      # max_k ceil(log2 P_k)
    width: int           # max_k P_k * (n + 1)


def _split_t_s(ts: int, t_cap: int) -> tuple[float, int]:
    """Factor a multiplier into strength <= t_cap and repetitions."""
    if ts <= t_cap:
        return float(ts), 1
    return float(t_cap), ts // t_cap


def build_schedule(strategy: str = "full_sequential", eps: float | None = None,
                   k_max: int | None = None, parallelism: int | None = None,
                   beta: float = 0.05, nu_variant: str = "optimized",
                   nu_final: int = 7, l_table=None, certified: bool = False,
                   t_cap: int = 8) -> Schedule:
    """Build the per-step resource schedule.

    Exactly one of ``eps`` (proof mode, ``K = ceil(log2(1/eps)) + 6``) and
    ``k_max`` (experiment mode) fixes the step count.  Strategies:

    * ``full_parallel``: ``T_k = 1``, ``P_k = 2^(k-1)``;
    * ``full_sequential``: ``P_k = 1``, ``T_k = 2^(k-1)``;
    * ``general``: ``P_k = 1`` while ``2^k <= 2^K / parallelism``, beyond
      that ``T_k S_k = 2^(K-1) / parallelism`` with the strength capped at
      ``t_cap`` and the rest folded into repetitions.

    ``l_table`` overrides the per-step query lengths; otherwise they come
    from the calibrated selector (or the certified one when ``certified``).
    """
    if (eps is None) == (k_max is None):
        raise ConfigurationError("give exactly one of eps (proof mode) and k_max")
    if eps is not None:
        if not 0.0 < eps < 1.0:
            raise ConfigurationError(f"target error must lie in (0, 1), got {eps}")
        K = math.ceil(math.log2(1.0 / eps)) + 6
    else:
        K = int(k_max)
    if K < 1:
        raise ConfigurationError(f"step count must be >= 1, got {K}")
    if not 0.0 < beta < rpe.ROBUSTNESS_LIMIT:
        raise ConfigurationError(f"bias budget must lie in (0, sqrt(6)/8), got {beta}")

    if strategy == "general":
        p_total = parallelism
        if p_total is None or p_total < 1 or (p_total & (p_total - 1)):
            raise ConfigurationError(
                f"general mode needs a power-of-two parallelism, got {p_total}")
        if p_total > 2 ** (K - 1):
            raise ConfigurationError(
                f"parallelism {p_total} exceeds the top multiplier 2^{K - 1}")

    steps = []
    for k in range(1, K + 1):
        m = 2 ** (k - 1)
        if strategy == "full_parallel":
            p, t, s = m, 1.0, 1
        elif strategy == "full_sequential":
            p, t, s = 1, float(m), 1
        elif strategy == "general":
            if 2 ** k <= 2 ** K // p_total:
                p = 1
                t, s = _split_t_s(m, t_cap)
            else:
                ts = 2 ** (K - 1) // p_total
                p = m // ts
                t, s = _split_t_s(ts, t_cap)
        else:
            raise ConfigurationError(f"unknown strategy {strategy!r}")
        nu = rpe.schedule_nu(K, k, variant=nu_variant, beta=beta, nu_final=nu_final)
        if l_table is not None:
            l = int(l_table[k - 1])
        elif certified:
            l = qsp.select_L(t, beta / (math.sqrt(2.0) * p * s))
        else:
            l = qsp.select_L_empirical(t)
        steps.append(ScheduleStep(k=k, m=m, p=p, t=t, s=s, nu=nu, l=l))
    return Schedule(steps=tuple(steps), strategy=strategy, K=K)


def query_count(schedule: Schedule) -> int:
    """Exact oracle-call total ``2 sum_k nu_k P_k S_k L_k``."""
    return 2 * sum(st.nu * st.p * st.s * st.l for st in schedule)


def resource_report(schedule: Schedule, n: int) -> ResourceReport:
    return ResourceReport(
        n_queries=query_count(schedule),
        oracle_depth=max(st.s * st.l for st in schedule),
        ghz_layers=max(circ.ghz_depth(st.p) for st in schedule),
        width=max(st.p * (n + 1) for st in schedule),
    )


def recompute_queries(schedule: Schedule, records) -> int:
    """Re-derive the query total from the measurement records (two settings
    of ``nu_k`` shots each; shifter applications are counted per branch)."""
    by_k = {st.k: st for st in schedule}
    total = 0
    for rec in records:
        st = by_k[rec.k]
        total += 2 * rec.nu * st.p * st.s * st.l
    return total


def _step_seed(seed: int, k: int, setting_index: int) -> np.random.Generator:
    # one independent stream per (step, setting), independent of strategy
    # and execution order
    return np.random.default_rng(np.random.SeedSequence([int(seed), k, setting_index]))


def _step_probability(instance: AmplitudeInstance, st: ScheduleStep,
                      setting: circ.MeasurementSetting, backend: str,
                      solver: str) -> float:
    if backend == "ideal":
        return circ.ideal_setting_probability(st.m, instance.phi, setting)
    spec = qsp.synthesize_shifter(st.t, st.l, method=solver)
    pc = circ.ParallelCircuit(P=st.p, spec=spec, S=st.s, instance=instance)
    if backend == "analytic":
        return circ.setting_probability(pc, setting)
    return circ.statevector_even_parity_probability(pc, setting)


def run(instance: AmplitudeInstance, schedule: Schedule, seed: int,
        backend: str = "analytic", solver: str = "layer_peel"):
    """Execute a full estimation run.

    Returns ``(PhaseEstimate, ResourceReport, list[MeasurementRecord])``.
    """
    if backend not in _BACKENDS:
        raise ConfigurationError(f"unknown backend {backend!r}")
    observations = []
    records = []
    for st in schedule:
        counts = []
        for idx, setting in enumerate((circ.MeasurementSetting.PLUS,
                                       circ.MeasurementSetting.PLUS_I)):
            p = _step_probability(instance, st, setting, backend, solver)
            counts.append(circ.sample_even_parity(p, st.nu, _step_seed(seed, st.k, idx)))
        records.append(MeasurementRecord(k=st.k, h_plus=counts[0], h_i=counts[1],
                                         nu=st.nu))
        observations.append(rpe.StepObservation(
            k=st.k, m=st.m, f_plus=counts[0] / st.nu, f_i=counts[1] / st.nu,
            nu=st.nu))
    estimate = rpe.estimate_phase(observations)
    return estimate, resource_report(schedule, instance.n), records


def hl_reference(n_queries: int) -> float:
    """Reference error level ``pi / (2 (N - 1))`` of the most query-efficient
    sequential estimator, for plot overlays."""
    if n_queries <= 1:
        raise DomainError(f"query count must exceed 1, got {n_queries}")
    return math.pi / (2.0 * (n_queries - 1))


def theorem_resources(eps: float, parallelism: int, beta: float = 0.05) -> tuple[int, int]:
    """Concrete (non-asymptotic) query and depth sums of the proof-mode
    schedule at ``eps`` with the given parallelism: returns
    ``(N, max_k S_k L_k + ceil(log2 P))``."""
    sched = build_schedule(strategy="general", eps=eps, parallelism=parallelism,
                           beta=beta, nu_variant="theoretical")
    depth = max(st.s * st.l for st in sched) + circ.ghz_depth(parallelism)
    return query_count(sched), depth
