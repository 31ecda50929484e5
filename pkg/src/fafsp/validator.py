"""Rule-agnostic feasibility checks and a desk-scale exhaustive oracle.

``validate_schedule`` re-derives every structural requirement of a realized
schedule straight from the instance data: each job runs exactly once on a
qualified machine, machine sequences do not overlap and charge the true
changeover, assembly starts only after its full kit, nothing starts before
its order arrives, and the per-order delivery/tardiness bookkeeping is
arithmetically consistent. It never looks at features or rules, so it is an
independent check on the engine.

``brute_force_optimum`` enumerates every non-delay dispatch sequence of a
tiny instance through the very same transition function the engine uses and
returns the minimum-tardiness schedule among them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Instance, Stage
from .sim import (ArcRecord, Schedule, SimState, _advance, apply_arc,
                  replay_arcs)

TOL = 1e-6

MACHINE_OVERLAP = "MachineOverlap"
PRECEDENCE = "Precedence"
ARRIVAL_BREACH = "ArrivalBreach"
SETUP_MISMATCH = "SetupMismatch"
DELIVERY_MISMATCH = "DeliveryMismatch"
TARDINESS_MISMATCH = "TardinessMismatch"
UNASSIGNED = "Unassigned"


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    job: int | None = None
    order: int | None = None
    machine: int | None = None
    measured: float | None = None
    required: float | None = None

    def __str__(self):
        return f"{self.kind}: {self.message}"


def validate_schedule(inst: Instance, sched: Schedule) -> list[Violation]:
    """All violations of the realized schedule (empty list = feasible)."""
    out: list[Violation] = []
    by_job: dict[int, ArcRecord] = {}
    for a in sched.arcs:
        if a.job in by_job:
            out.append(Violation(UNASSIGNED, f"job {a.job} dispatched more than once",
                                 job=a.job))
        else:
            by_job[a.job] = a

    for job in inst.jobs:
        a = by_job.get(job.id)
        if a is None:
            out.append(Violation(UNASSIGNED, f"job {job.id} never dispatched", job=job.id))
            continue
        if a.machine not in job.eligible:
            out.append(Violation(UNASSIGNED,
                                 f"job {job.id} ran on unqualified machine {a.machine}",
                                 job=job.id, machine=a.machine))
            continue
        pt = job.eligible[a.machine]
        if abs(a.ct - (a.st + a.setup + pt)) > TOL:
            out.append(Violation(SETUP_MISMATCH,
                                 f"job {job.id}: ct {a.ct} != st + setup + pt "
                                 f"{a.st + a.setup + pt}",
                                 job=job.id, measured=a.ct, required=a.st + a.setup + pt))

    # machine sequences: ordering, overlap, true-predecessor setups
    per_machine: dict[int, list[ArcRecord]] = {}
    for a in sched.arcs:
        per_machine.setdefault(a.machine, []).append(a)
    for m, arcs in per_machine.items():
        arcs = sorted(arcs, key=lambda a: (a.st, a.ct, a.job))
        prev: ArcRecord | None = None
        for a in arcs:
            if prev is not None and a.st < prev.ct - TOL:
                out.append(Violation(MACHINE_OVERLAP,
                                     f"machine {m}: job {a.job} starts at {a.st} "
                                     f"before job {prev.job} ends at {prev.ct}",
                                     job=a.job, machine=m,
                                     measured=a.st, required=prev.ct))
            expected = inst.setup_time(prev.job if prev is not None else None, a.job)
            if abs(a.setup - expected) > TOL:
                out.append(Violation(SETUP_MISMATCH,
                                     f"machine {m}: job {a.job} charged setup {a.setup}, "
                                     f"changeover table says {expected}",
                                     job=a.job, machine=m,
                                     measured=a.setup, required=expected))
            prev = a

    # kit precedence and arrival
    for job in inst.jobs:
        a = by_job.get(job.id)
        if a is None:
            continue
        arrival = inst.orders[job.order_id].arrival
        if a.st < arrival - TOL:
            out.append(Violation(ARRIVAL_BREACH,
                                 f"job {job.id} starts at {a.st} before order arrival {arrival}",
                                 job=job.id, order=job.order_id,
                                 measured=a.st, required=arrival))
        if job.kind == Stage.ASSEMBLY:
            for p in job.predecessors:
                pa = by_job.get(p)
                if pa is not None and a.st < pa.ct - TOL:
                    out.append(Violation(PRECEDENCE,
                                         f"assembly job {job.id} starts at {a.st} before "
                                         f"kit part {p} ends at {pa.ct}",
                                         job=job.id, measured=a.st, required=pa.ct))

    # delivery and tardiness bookkeeping
    for o in inst.orders:
        asm_cts = [by_job[p.assembly_job_id].ct for p in o.products
                   if p.assembly_job_id in by_job]
        if o.id not in sched.ft:
            out.append(Violation(DELIVERY_MISMATCH, f"order {o.id} has no delivery time",
                                 order=o.id))
            continue
        if len(asm_cts) == len(o.products):
            ft = max(asm_cts)
            if abs(sched.ft[o.id] - ft) > TOL:
                out.append(Violation(DELIVERY_MISMATCH,
                                     f"order {o.id}: recorded delivery {sched.ft[o.id]} != "
                                     f"latest assembly completion {ft}",
                                     order=o.id, measured=sched.ft[o.id], required=ft))
        tt = max(0.0, sched.ft[o.id] - o.due)
        if abs(sched.tt.get(o.id, float("nan")) - tt) > TOL:
            out.append(Violation(TARDINESS_MISMATCH,
                                 f"order {o.id}: recorded tardiness {sched.tt.get(o.id)} != "
                                 f"max(0, ft - due) = {tt}",
                                 order=o.id, measured=sched.tt.get(o.id), required=tt))
    return out


class OracleLimitError(ValueError):
    pass


def _state_key(state: SimState) -> tuple:
    # everything the future depends on: job statuses, machine occupancy and
    # last-processed jobs, partial per-order delivery maxima, and the clock
    return (state.clock, state.status.tobytes(), state.m_idle.tobytes(),
            state.m_last.tobytes(), state.order_ft.tobytes())


def brute_force_optimum(inst: Instance, max_jobs: int = 8, max_machines: int = 4,
                        max_states: int = 2_000_000) -> tuple[float, Schedule]:
    """Minimum total tardiness over every non-delay dispatch sequence.

    Non-delay means a machine is never kept idle while some feasible arc
    exists, which is exactly the set of schedules any dispatching rule can
    reach; deliberate idling is out of scope. Ties between optimal sequences
    break on the lexicographically smallest arc log.
    """
    if inst.num_jobs > max_jobs:
        raise OracleLimitError(f"{inst.num_jobs} jobs exceeds the limit of {max_jobs}")
    if inst.num_machines > max_machines:
        raise OracleLimitError(f"{inst.num_machines} machines exceeds the limit of {max_machines}")

    memo: dict[tuple, tuple[float, tuple]] = {}
    visited = 0

    def fixed_tardiness(state: SimState) -> float:
        return float(state.order_tt.sum())

    def dfs(state: SimState) -> tuple[float, tuple]:
        """(best future tardiness, best suffix arc log); owns its state."""
        nonlocal visited
        if state.done_count == state.t.J:
            return 0.0, ()
        key = _state_key(state)
        hit = memo.get(key)
        if hit is not None:
            return hit
        visited += 1
        if visited > max_states:
            raise OracleLimitError(f"search exceeded {max_states} states")

        jobs, machs = state._arc_arrays()
        if len(jobs) == 0:
            before = fixed_tardiness(state)
            _advance(state)
            gained = fixed_tardiness(state) - before
            sub, log = dfs(state)
            best = (gained + sub, log)
        else:
            best = None
            for j, m in zip(jobs.tolist(), machs.tolist()):
                child = state.clone()
                apply_arc(child, (j, m))
                sub, log = dfs(child)
                cand = (sub, ((j, m),) + log)
                if best is None or cand < best:
                    best = cand
        memo[key] = best
        return best

    value, log = dfs(SimState(inst))
    sched = replay_arcs(inst, log)
    return value, sched
