"""Payment process, birth-and-death chain processes, and Monte Carlo campaigns."""

from __future__ import annotations

import logging
import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .analytics import ring_edge_probability
from .graph import ChannelGraph, init_balances, load_graph, make_clique, make_ring
from .paths import DagCache, sample_shortest_path
from .rng import Rng, run_seed

logger = logging.getLogger(__name__)

TOPOLOGIES = ("clique", "ring", "snapshot", "independent")
STOP_MODES = ("depletion", "attempt")

DEPLETED = "depleted"
ATTEMPT_FAILED = "attempt_failed"
STEP_CAP = "step_cap_reached"

_CHUNK = 1 << 14
_PROGRESS_EVERY = 10 ** 8


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign point; fully determines its outcome list."""

    topology: str
    nodes: Optional[int] = None
    balance: Optional[int] = None          # per-side balance k; capacity is 2k
    snapshot_path: Optional[str] = None
    amount: int = 1
    stop_mode: str = "depletion"
    max_steps: int = 10 ** 12
    base_seed: int = 0
    runs: int = 1
    p_select: Optional[float] = None       # independent-chains selection probability
    clique_fast_path: bool = True

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}; valid: {TOPOLOGIES}")
        if self.stop_mode not in STOP_MODES:
            raise ValueError(f"unknown stop_mode {self.stop_mode!r}; valid: {STOP_MODES}")
        if self.amount < 1:
            raise ValueError("amount must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.topology in ("clique", "ring", "independent"):
            if self.nodes is None or self.balance is None:
                raise ValueError(f"{self.topology} topology needs nodes and balance")
            if self.balance < 1:
                raise ValueError("balance must be >= 1")
        if self.topology == "snapshot" and self.snapshot_path is None:
            raise ValueError("snapshot topology needs snapshot_path")
        if self.p_select is not None and not (0.0 < self.p_select <= 1.0):
            raise ValueError("p_select must be in (0, 1]")

    def config_id(self) -> str:
        parts = [self.topology]
        if self.nodes is not None:
            parts.append(f"n{self.nodes}")
        if self.balance is not None:
            parts.append(f"k{self.balance}")
        parts.append(f"x{self.amount}")
        parts.append(self.stop_mode)
        return "-".join(parts)

    def as_dict(self) -> dict:
        d = {
            "topology": self.topology,
            "amount": self.amount,
            "stop_mode": self.stop_mode,
            "max_steps": self.max_steps,
            "base_seed": self.base_seed,
            "runs": self.runs,
        }
        if self.nodes is not None:
            d["nodes"] = self.nodes
        if self.balance is not None:
            d["balance"] = self.balance
        if self.snapshot_path is not None:
            d["snapshot"] = self.snapshot_path
        if self.p_select is not None:
            d["p_select"] = self.p_select
        return d


@dataclass(frozen=True)
class RunOutcome:
    """Result of one run: rounds survived, what stopped it, and its seed."""

    tau: int
    failing_edge: Optional[int]
    failure_kind: str
    seed_used: int

    @property
    def censored(self) -> bool:
        return self.failure_kind == STEP_CAP


@dataclass
class ChainState:
    """Signed positions of the birth-and-death chains, one per edge."""

    positions: list[int]
    boundary: int


def build_graph(cfg: SimConfig) -> Optional[ChannelGraph]:
    if cfg.topology == "clique":
        return make_clique(cfg.nodes, 2 * cfg.balance)
    if cfg.topology == "ring":
        return make_ring(cfg.nodes, 2 * cfg.balance)
    if cfg.topology == "snapshot":
        return load_graph(cfg.snapshot_path)
    return None  # independent chains have no graph


def run_payment_process(g: ChannelGraph, cfg: SimConfig, rng: Rng,
                        dag_cache: DagCache | None = None) -> RunOutcome:
    """Execute the random payment process on g until the stop condition.

    Per round: a distinct (source, destination) pair is drawn uniformly, a
    shortest path between them is drawn uniformly, and a payment of
    ``cfg.amount`` moves that amount along every path edge toward the
    destination.  In depletion mode the round is applied and the run stops
    once some edge is left with b_min below the amount; in attempt mode an
    infeasible drawn path is not applied and ends the run.
    """
    x = cfg.amount
    attempt = cfg.stop_mode == "attempt"
    state = init_balances(g)
    bal = state.at_lo
    caps = g.capacity
    if not attempt:
        for eid in range(g.edge_count):
            if min(bal[eid], caps[eid] - bal[eid]) < x:
                return RunOutcome(0, eid, DEPLETED, rng.seed)
    cache = dag_cache if dag_cache is not None else DagCache(g)
    eidx = g.edge_index
    n = g.node_count
    max_steps = cfg.max_steps
    t = 0
    next_progress = _PROGRESS_EVERY
    while t < max_steps:
        s, dst = rng.pair(n)
        dag = cache.get(s)
        if dag.sigma[dst] == 0:
            raise ValueError(f"graph is disconnected: {dst} unreachable from {s}")
        path = sample_shortest_path(dag, dst, rng)
        if attempt:
            a = path[0]
            for b in path[1:]:
                if a < b:
                    eid = eidx[(a, b)]
                    payer = bal[eid]
                else:
                    eid = eidx[(b, a)]
                    payer = caps[eid] - bal[eid]
                if payer < x:
                    return RunOutcome(t, eid, ATTEMPT_FAILED, rng.seed)
                a = b
            a = path[0]
            for b in path[1:]:
                if a < b:
                    bal[eidx[(a, b)]] -= x
                else:
                    bal[eidx[(b, a)]] += x
                a = b
            t += 1
        else:
            failing = -1
            a = path[0]
            for b in path[1:]:
                if a < b:
                    eid = eidx[(a, b)]
                    nb = bal[eid] - x
                else:
                    eid = eidx[(b, a)]
                    nb = bal[eid] + x
                bal[eid] = nb
                if failing < 0 and min(nb, caps[eid] - nb) < x:
                    failing = eid
                a = b
            t += 1
            if failing >= 0:
                return RunOutcome(t, failing, DEPLETED, rng.seed)
        if t >= next_progress:
            logger.info("payment process at %d rounds (seed %d)", t, rng.seed)
            next_progress += _PROGRESS_EVERY
    return RunOutcome(t, None, STEP_CAP, rng.seed)


def _clique_fast(n: int, capacity: int, cfg: SimConfig, rng: Rng) -> RunOutcome:
    """Payment process on a uniform-capacity clique via its single-edge form.

    On a clique the drawn shortest path is exactly the edge {u,v}, so drawing
    a distinct pair plus orientation is the same as drawing a uniform edge and
    direction; run_coupled_clique verifies the two forms stop together.
    """
    m = n * (n - 1) // 2
    x = cfg.amount
    attempt = cfg.stop_mode == "attempt"
    half = capacity // 2
    if not attempt and min(half, capacity - half) < x:
        return RunOutcome(0, 0, DEPLETED, rng.seed)
    bal = [half] * m
    max_steps = cfg.max_steps
    t = 0
    size = 128  # grows geometrically so short runs stay cheap
    next_progress = _PROGRESS_EVERY
    while t < max_steps:
        chunk = int(min(size, max_steps - t))
        size = min(size * 2, _CHUNK)
        edges = rng.indices(m, chunk)
        dirs = rng.bits(chunk)
        for eid, d in zip(edges, dirs):
            b = bal[eid]
            if d:  # larger-id endpoint pays the smaller-id one
                payer = capacity - b
                nb = b + x
            else:
                payer = b
                nb = b - x
            if attempt and payer < x:
                return RunOutcome(t, eid, ATTEMPT_FAILED, rng.seed)
            bal[eid] = nb
            t += 1
            if not attempt and min(nb, capacity - nb) < x:
                return RunOutcome(t, eid, DEPLETED, rng.seed)
        if t >= next_progress:
            logger.info("clique process at %d rounds (seed %d)", t, rng.seed)
            next_progress += _PROGRESS_EVERY
    return RunOutcome(t, None, STEP_CAP, rng.seed)


def run_bdc_process(m: int, k: int, max_steps: int, rng: Rng) -> RunOutcome:
    """Multiple birth-and-death chains: each round one uniform chain moves ±1.

    All m chains start at 0; returns the iteration count at the first time
    some chain reaches ±k.
    """
    if m < 1 or k < 1:
        raise ValueError("m and k must be >= 1")
    state = ChainState(positions=[0] * m, boundary=k)
    pos = state.positions
    t = 0
    size = 128
    next_progress = _PROGRESS_EVERY
    while t < max_steps:
        chunk = int(min(size, max_steps - t))
        size = min(size * 2, _CHUNK)
        moves = rng.bits(chunk)
        chains = rng.indices(m, chunk) if m > 1 else None
        for i in range(chunk):
            e = chains[i] if chains is not None else 0
            p = pos[e] + 1 if moves[i] else pos[e] - 1
            pos[e] = p
            t += 1
            if p == k or p == -k:
                return RunOutcome(t, e, DEPLETED, rng.seed)
        if t >= next_progress:
            logger.info("bdc process at %d rounds (seed %d)", t, rng.seed)
            next_progress += _PROGRESS_EVERY
    return RunOutcome(t, None, STEP_CAP, rng.seed)


def run_coupled_clique(n: int, k: int, max_steps: int, rng: Rng,
                       corrupt_map: bool = False) -> tuple[RunOutcome, RunOutcome]:
    """Run the clique payment process and the m-chain process on one stream.

    Both processes consume the same (source, destination) draws: the payment
    process updates edge balances on K_n; the chain process updates chain
    f({u,v}) by +1 when the pair follows the fixed orientation (smaller id →
    larger id) and −1 otherwise.  The coupling forces identical stop times.

    ``corrupt_map`` is a negative-control hook.  Relabeling chains with any
    bijection would still satisfy the coupling, so the hook makes f
    non-bijective instead: pair 0 drives chain 1 and chain 0 starves, which
    makes the stop times disagree on a constant fraction of seeds (needs
    n >= 3 so that m >= 2).
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    m = n * (n - 1) // 2
    capacity = 2 * k
    bal = [k] * m          # process 1: balance at smaller-id endpoint
    pos = [0] * m          # process 2: chain positions
    tau1 = tau2 = None
    edge1 = edge2 = None
    t = 0
    while (tau1 is None or tau2 is None) and t < max_steps:
        s, d = rng.pair(n)
        u, v = (s, d) if s < d else (d, s)
        eid = u * (2 * n - u - 1) // 2 + (v - u - 1)
        forward = s < d  # follows the fixed orientation u -> v
        t += 1
        if tau1 is None:
            b = bal[eid] + (-1 if forward else 1)
            bal[eid] = b
            if b == 0 or b == capacity:
                tau1, edge1 = t, eid
        if tau2 is None:
            ce = 1 % m if corrupt_map and eid == 0 else eid
            p = pos[ce] + (1 if forward else -1)
            pos[ce] = p
            if p == k or p == -k:
                tau2, edge2 = t, ce
    out1 = (RunOutcome(tau1, edge1, DEPLETED, rng.seed) if tau1 is not None
            else RunOutcome(t, None, STEP_CAP, rng.seed))
    out2 = (RunOutcome(tau2, edge2, DEPLETED, rng.seed) if tau2 is not None
            else RunOutcome(t, None, STEP_CAP, rng.seed))
    return out1, out2


def run_independent_chains(n: int, k: int, p_select: float, max_steps: int,
                           rng: Rng) -> RunOutcome:
    """n independent chains; each round every chain moves ±1 with prob p_select.

    Unlike the ring these updates are fully independent across chains; the
    expected number of moving chains per round matches the ring when
    p_select = ring_edge_probability(n).
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    if not (0.0 < p_select <= 1.0):
        raise ValueError("p_select must be in (0, 1]")
    gen = rng.np
    pos = np.zeros(n, dtype=np.int64)
    t = 0
    rows = 8
    next_progress = _PROGRESS_EVERY
    while t < max_steps:
        block = int(min(rows, max_steps - t))
        rows = min(rows * 2, 256)
        selected = gen.random((block, n)) < p_select
        steps = gen.integers(0, 2, size=(block, n), dtype=np.int8).astype(np.int64) * 2 - 1
        moves = selected * steps
        for r in range(block):
            pos += moves[r]
            t += 1
            hits = np.abs(pos) >= k
            if hits.any():
                return RunOutcome(t, int(np.argmax(hits)), DEPLETED, rng.seed)
        if t >= next_progress:
            logger.info("independent chains at %d rounds (seed %d)", t, rng.seed)
            next_progress += _PROGRESS_EVERY
    return RunOutcome(t, None, STEP_CAP, rng.seed)


def _run_single(graph: Optional[ChannelGraph], cfg: SimConfig, run_index: int,
                cache: DagCache | None = None) -> RunOutcome:
    rng = Rng(run_seed(cfg.base_seed, run_index))
    if cfg.topology == "independent":
        p = cfg.p_select if cfg.p_select is not None else ring_edge_probability(cfg.nodes)
        return run_independent_chains(cfg.nodes, cfg.balance, p, cfg.max_steps, rng)
    if cfg.topology == "clique" and cfg.clique_fast_path:
        return _clique_fast(cfg.nodes, 2 * cfg.balance, cfg, rng)
    return run_payment_process(graph, cfg, rng, cache)


_WORKER_STATE: dict = {}


def _worker_init(graph, cfg):
    _WORKER_STATE["graph"] = graph
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["cache"] = DagCache(graph) if graph is not None else None


def _worker_run(run_index: int) -> RunOutcome:
    return _run_single(_WORKER_STATE["graph"], _WORKER_STATE["cfg"], run_index,
                       _WORKER_STATE["cache"])


def monte_carlo(cfg: SimConfig, graph: Optional[ChannelGraph] = None,
                workers: int = 1) -> list[RunOutcome]:
    """Run cfg.runs independent replicas; outcome i uses run_seed(base_seed, i).

    Results are ordered by run index and bit-identical for a fixed config at
    every worker count: each run's stream depends only on (base_seed, index).
    """
    if graph is None:
        graph = build_graph(cfg)
    if graph is not None and not graph.is_connected():
        raise ValueError("graph must be connected (take the giant component first)")
    if workers <= 1 or cfg.runs == 1:
        cache = DagCache(graph) if graph is not None else None
        return [_run_single(graph, cfg, i, cache) for i in range(cfg.runs)]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        logger.warning("fork unavailable; running sequentially")
        cache = DagCache(graph) if graph is not None else None
        return [_run_single(graph, cfg, i, cache) for i in range(cfg.runs)]
    chunksize = max(1, cfg.runs // (workers * 4))
    with ctx.Pool(workers, initializer=_worker_init, initargs=(graph, cfg)) as pool:
        return pool.map(_worker_run, range(cfg.runs), chunksize)


@dataclass(frozen=True)
class SweepPoint:
    """Aggregated outcomes at one swept per-side balance value."""

    balance: int
    outcomes: list[RunOutcome] = field(repr=False)
    p_fail_within_horizon: Optional[float] = None


def capacity_sweep(cfg: SimConfig, k_from: int, k_to: int, k_step: int,
                   runs_per_point: int, workers: int = 1,
                   horizon: Optional[int] = None) -> list[SweepPoint]:
    """monte_carlo at each balance in [k_from, k_to] stepping k_step.

    The same per-run seeds are reused at every point (common random numbers),
    which makes the mean's growth in k a pathwise property for the chain
    topologies.  ``horizon`` adds an empirical Prob{tau <= horizon} per point.
    """
    if k_from > k_to or k_step <= 0:
        raise ValueError("need k_from <= k_to and k_step > 0")
    if horizon is not None and horizon > cfg.max_steps:
        raise ValueError("horizon cannot exceed max_steps")
    points = []
    for k in range(k_from, k_to + 1, k_step):
        point_cfg = replace(cfg, balance=k, runs=runs_per_point)
        outcomes = monte_carlo(point_cfg, workers=workers)
        p_h = None
        if horizon is not None:
            hit = sum(1 for o in outcomes if not o.censored and o.tau <= horizon)
            p_h = hit / len(outcomes)
        points.append(SweepPoint(k, outcomes, p_h))
    return points


def multi_amount_experiment(graph: ChannelGraph, amounts: list[int], runs: int,
                            base_seed: int, stop_mode: str = "attempt",
                            max_steps: int = 10 ** 12,
                            workers: int = 1) -> list[tuple[int, list[RunOutcome]]]:
    """One monte_carlo campaign per amount on the same graph.

    Per-run seeds are shared across amounts, so a larger amount replays the
    same draw sequence and can only stop earlier.
    """
    if not amounts:
        raise ValueError("amounts must be nonempty")
    results = []
    for x in amounts:
        cfg = SimConfig(topology="snapshot", snapshot_path="<in-memory>", amount=x,
                        stop_mode=stop_mode, max_steps=max_steps,
                        base_seed=base_seed, runs=runs)
        results.append((x, monte_carlo(cfg, graph=graph, workers=workers)))
    return results
