"""Runtime benchmark over synthetic graphs."""

import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

from .database import ResultsStore
from .errors import FairRankError
from .exact import DEFAULT_DENSE_CAP
from .gmres import KrylovConfig
from .logging_config import get_logger
from .scores import FairnessSpec
from .solvers import METHODS, run_method
from .synth import SynthSpec, generate

logger = get_logger(__name__)

STATUS_OK = "ok"
STATUS_CAP = "CAP"


@dataclass
class BenchRow:
    """Timing of one method on one graph."""

    graph: str
    node_count: int
    edge_count: int
    method: str
    status: str
    wall_time_seconds: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "graph": self.graph,
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "method": self.method,
            "status": self.status,
            "wall_time_seconds": self.wall_time_seconds,
        }


class BenchRunner:
    """Times ranking methods on a list of synthetic graphs.

    Graph generation is not timed. The exact method is skipped above the
    dense cap and recorded as ``CAP``; a failing method is recorded with
    its error name and the table carries on.
    """

    def __init__(
        self,
        methods: Sequence[str] = METHODS,
        spec: FairnessSpec | None = None,
        krylov: KrylovConfig | None = None,
        dense_cap: int = DEFAULT_DENSE_CAP,
        store: ResultsStore | None = None,
        get_time: Callable[[], float] | None = None,
    ) -> None:
        """Initialize the runner.

        Args:
            methods: Method names to time, in table order.
            spec: Fairness parameters for every run.
            krylov: GMRES settings.
            dense_cap: Largest N the exact method attempts.
            store: Optional ledger receiving every row.
            get_time: Clock returning seconds (injectable for tests).
        """
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown method(s): {', '.join(unknown)}")
        self.methods = tuple(methods)
        self.spec = spec or FairnessSpec()
        self.krylov = krylov or KrylovConfig()
        self.dense_cap = dense_cap
        self.store = store
        self._get_time = get_time or time.perf_counter

    def run(self, synth_specs: Sequence[SynthSpec]) -> list[BenchRow]:
        """Benchmark every method on every graph."""
        rows: list[BenchRow] = []
        for synth_spec in synth_specs:
            g, groups = generate(synth_spec)
            label = synth_spec.to_string()
            for method in self.methods:
                if method == "exact" and g.node_count > self.dense_cap:
                    status, elapsed = STATUS_CAP, math.nan
                else:
                    start = self._get_time()
                    try:
                        run_method(method, g, groups, self.spec, self.krylov, self.dense_cap)
                        status = STATUS_OK
                    except FairRankError as e:
                        logger.warning("Benchmark run failed", method=method, error=str(e))
                        status = type(e).__name__
                    elapsed = self._get_time() - start
                    if status != STATUS_OK:
                        elapsed = math.nan
                row = BenchRow(label, g.node_count, g.edge_count, method, status, elapsed)
                rows.append(row)
                logger.info("Benchmark row", **row.to_dict())
                if self.store is not None:
                    self.store.record_timing(
                        label, g.node_count, g.edge_count, method, status, elapsed
                    )
        return rows
