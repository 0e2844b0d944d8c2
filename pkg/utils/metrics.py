import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from functools import wraps
from typing import Any, Dict, List, Optional

import psutil

from config.settings import get_setting

logger = logging.getLogger(__name__)

_MB = 1024 * 1024


@dataclass
class ResourceSnapshot:
    """psutil view of this process at one instant"""
    rss_mb: float = 0.0
    cpu_user_s: float = 0.0
    cpu_system_s: float = 0.0
    threads: int = 0
    system_memory_percent: float = 0.0

    @classmethod
    def take(cls) -> "ResourceSnapshot":
        process = psutil.Process()
        with process.oneshot():
            cpu = process.cpu_times()
            return cls(
                rss_mb=process.memory_info().rss / _MB,
                cpu_user_s=cpu.user,
                cpu_system_s=cpu.system,
                threads=process.num_threads(),
                system_memory_percent=psutil.virtual_memory().percent,
            )


@dataclass
class RunMetrics:
    """Wall clock, CPU time and memory of one experiment run"""
    name: str
    config_hash: str = ""
    workers: int = 1
    status: str = "pending"  # pending, running, completed, failed
    error: Optional[str] = None
    wall_s: float = 0.0
    before: ResourceSnapshot = field(default_factory=ResourceSnapshot)
    after: ResourceSnapshot = field(default_factory=ResourceSnapshot)
    _t0: float = field(default=0.0, repr=False)

    def begin(self) -> None:
        self.status = "running"
        self.before = ResourceSnapshot.take()
        self._t0 = time.perf_counter()

    def finish(self, error: Optional[BaseException] = None) -> None:
        self.wall_s = time.perf_counter() - self._t0
        self.after = ResourceSnapshot.take()
        if error is None:
            self.status = "completed"
        else:
            self.status = "failed"
            self.error = f"{type(error).__name__}: {error}"

    @property
    def cpu_s(self) -> float:
        return (self.after.cpu_user_s + self.after.cpu_system_s) - (self.before.cpu_user_s + self.before.cpu_system_s)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("_t0")
        data["cpu_s"] = self.cpu_s
        data["rss_growth_mb"] = self.after.rss_mb - self.before.rss_mb
        return data


@dataclass
class SessionMetrics:
    session_id: str
    started: float = field(default_factory=time.time)
    runs: List[RunMetrics] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "session_id": self.session_id,
            "started": datetime.fromtimestamp(self.started).isoformat(timespec="seconds"),
            "elapsed_s": time.time() - self.started,
            "runs": [run.to_dict() for run in self.runs],
        }


class MetricsManager:
    """Process-wide collector of run metrics, one session per CLI invocation"""
    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        with cls._lock:
            if cls._instance is None:
                instance = super().__new__(cls)
                instance._session = None
                cls._instance = instance
        return cls._instance

    @property
    def session(self) -> Optional[SessionMetrics]:
        return self._session

    def start_session(self, session_id: Optional[str] = None) -> str:
        session_id = session_id or f"session_{datetime.now().strftime('%Y%m%d_%H%M%S')}_{os.getpid()}"
        self._session = SessionMetrics(session_id=session_id)
        logger.debug(f"Metrics session {session_id} started")
        return session_id

    def new_run(self, name: str) -> RunMetrics:
        if self._session is None:
            self.start_session()
        run = RunMetrics(name=name, workers=int(get_setting("N_WORKERS", 1)))
        self._session.runs.append(run)
        return run

    def save_session(self) -> Optional[str]:
        """Write the session to METRICS_DIR; returns the file path"""
        if self._session is None:
            logger.warning("No metrics session to save")
            return None
        metrics_dir = get_setting("METRICS_DIR", "metrics")
        os.makedirs(metrics_dir, exist_ok=True)
        path = os.path.join(metrics_dir, f"{self._session.session_id}.json")
        with open(path, "w") as f:
            json.dump(self._session.to_dict(), f, indent=2)
        logger.info(f"Saved session metrics to {path}")
        return path


def track_execution(name: str):
    """Record timing and resource use of each call; the first argument may carry config_hash()"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            run = MetricsManager().new_run(name)
            config = args[0] if args else None
            if hasattr(config, "config_hash"):
                run.config_hash = config.config_hash()
            run.begin()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                run.finish(e)
                raise
            run.finish()
            logger.debug(f"{name}: {run.wall_s:.3f}s wall, {run.cpu_s:.3f}s CPU")
            return result
        return wrapper
    return decorator


def last_duration_s(name: str) -> float:
    """Wall-clock seconds of the latest tracked run of `name`"""
    session = MetricsManager().session
    if session is None:
        return 0.0
    for run in reversed(session.runs):
        if run.name == name:
            return run.wall_s
    return 0.0


def get_metrics_summary() -> Dict[str, Any]:
    session = MetricsManager().session
    if session is None:
        return {"error": "No active session"}
    return {
        "session_id": session.session_id,
        "runs": len(session.runs),
        "failed": sum(run.status == "failed" for run in session.runs),
        "wall_s": sum(run.wall_s for run in session.runs),
        "cpu_s": sum(run.cpu_s for run in session.runs),
        "rss_mb": ResourceSnapshot.take().rss_mb,
    }
