"""SQLite ledger of solver runs and benchmark timings."""

from datetime import datetime, timezone
from typing import Any

from sqlalchemy import Column, DateTime, Float, Integer, String, create_engine, func
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from .scores import SolverReport

Base = declarative_base()


def _utc_now() -> datetime:
    """Return current UTC time."""
    return datetime.now(timezone.utc)


class RunRecord(Base):
    """One solver run on one graph."""

    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    method = Column(String, nullable=False)
    graph_fingerprint = Column(String, nullable=False, index=True)
    node_count = Column(Integer, nullable=False)
    edge_count = Column(Integer, nullable=False)
    nu = Column(Float, nullable=False)
    target = Column(Float, nullable=True)
    outer_iterations = Column(Integer, nullable=False)
    inner_iterations_total = Column(Integer, nullable=False)
    final_residual = Column(Float, nullable=False)
    achieved_protected_mass = Column(Float, nullable=True)
    wall_time_seconds = Column(Float, nullable=False)
    created_at = Column(DateTime, default=_utc_now)


class BenchTiming(Base):
    """One (graph, method) cell of a benchmark table."""

    __tablename__ = "bench_timings"

    id = Column(Integer, primary_key=True, autoincrement=True)
    graph_label = Column(String, nullable=False)
    node_count = Column(Integer, nullable=False)
    edge_count = Column(Integer, nullable=False)
    method = Column(String, nullable=False)
    status = Column(String, nullable=False)  # ok/CAP/error name
    wall_time_seconds = Column(Float, nullable=True)
    created_at = Column(DateTime, default=_utc_now)


def _finite_or_none(value: float | None) -> float | None:
    if value is None or value != value:
        return None
    return float(value)


class ResultsStore:
    """Session manager for the results ledger."""

    def __init__(self, database_path: str) -> None:
        """Open (and create if needed) the ledger.

        Args:
            database_path: Path to the SQLite file, or ``:memory:``.
        """
        self.engine = create_engine(f"sqlite:///{database_path}")
        Base.metadata.create_all(self.engine)
        self.SessionLocal = sessionmaker(bind=self.engine, expire_on_commit=False)

    def get_session(self) -> Session:
        """Get a new database session."""
        return self.SessionLocal()

    def record_run(
        self,
        method: str,
        graph_fingerprint: str,
        node_count: int,
        edge_count: int,
        nu: float,
        report: SolverReport,
        target: float | None = None,
    ) -> RunRecord:
        """Store a solver run.

        Args:
            method: Solver name.
            graph_fingerprint: Stable hash of the graph's edges.
            node_count: N.
            edge_count: M.
            nu: Teleport probability used.
            report: The solver's report.
            target: Protected-mass target, if any.

        Returns:
            The created RunRecord.
        """
        with self.get_session() as session:
            record = RunRecord(
                method=method,
                graph_fingerprint=graph_fingerprint,
                node_count=node_count,
                edge_count=edge_count,
                nu=nu,
                target=target,
                outer_iterations=report.outer_iterations,
                inner_iterations_total=report.inner_iterations_total,
                final_residual=float(report.final_residual),
                achieved_protected_mass=_finite_or_none(report.achieved_protected_mass),
                wall_time_seconds=float(report.wall_time_seconds),
            )
            session.add(record)
            session.commit()
            session.refresh(record)
            return record

    def record_timing(
        self,
        graph_label: str,
        node_count: int,
        edge_count: int,
        method: str,
        status: str,
        wall_time_seconds: float | None,
    ) -> BenchTiming:
        """Store one benchmark timing row."""
        with self.get_session() as session:
            timing = BenchTiming(
                graph_label=graph_label,
                node_count=node_count,
                edge_count=edge_count,
                method=method,
                status=status,
                wall_time_seconds=_finite_or_none(wall_time_seconds),
            )
            session.add(timing)
            session.commit()
            session.refresh(timing)
            return timing

    def recent_runs(self, limit: int = 20) -> list[RunRecord]:
        """Most recent runs first."""
        with self.get_session() as session:
            return (
                session.query(RunRecord)
                .order_by(RunRecord.created_at.desc(), RunRecord.id.desc())
                .limit(limit)
                .all()
            )

    def runs_for_graph(self, graph_fingerprint: str) -> list[RunRecord]:
        """All runs on one graph, oldest first."""
        with self.get_session() as session:
            return (
                session.query(RunRecord)
                .filter(RunRecord.graph_fingerprint == graph_fingerprint)
                .order_by(RunRecord.id)
                .all()
            )

    def timing_summary(self) -> list[dict[str, Any]]:
        """Mean successful wall time and row count per method.

        Returns:
            One dictionary per method, sorted by method name.
        """
        with self.get_session() as session:
            rows = (
                session.query(
                    BenchTiming.method,
                    func.count(BenchTiming.id),
                    func.avg(BenchTiming.wall_time_seconds),
                )
                .filter(BenchTiming.status == "ok")
                .group_by(BenchTiming.method)
                .order_by(BenchTiming.method)
                .all()
            )
            return [
                {"method": method, "runs": int(count), "mean_seconds": float(mean)}
                for method, count, mean in rows
            ]
