# utils/concurrency.py
"""
Concurrency utilities with progress tracking.

Provides thread-based parallel processing with:
- Worker count taken from RIS_SIM_THREADS (0 = auto)
- Results returned in input order, independent of completion order
- Optional tqdm progress bars for long sweeps
"""

import os
import time
import threading
import concurrent.futures
from dataclasses import dataclass, field
from typing import List, Any, Callable, Optional, Tuple, TypeVar, Generic, Sequence

from tqdm import tqdm

from utils.exceptions import ConfigurationError
from utils.logger import setup_logger

logger = setup_logger()

T = TypeVar('T')

THREADS_ENV = 'RIS_SIM_THREADS'


def resolve_worker_count() -> int:
    """
    Number of worker threads to use.

    Reads RIS_SIM_THREADS; unset, empty or 0 means one worker per CPU.

    Raises:
        ConfigurationError: If the variable is negative or not an integer
    """
    raw = os.getenv(THREADS_ENV, '').strip()
    if not raw:
        return os.cpu_count() or 1

    try:
        requested = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}", config_key=THREADS_ENV)

    if requested < 0:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 0, got {requested}", config_key=THREADS_ENV)

    return requested or (os.cpu_count() or 1)


@dataclass
class ProcessingResult(Generic[T]):
    """
    Result container for parallel processing operations.

    Attributes:
        successful: Results of the items that succeeded, in input order
        failed: (index, item, error) for each failure, in input order
        total_time: Total processing time in seconds
    """

    successful: List[T] = field(default_factory=list)
    failed: List[Tuple[int, Any, Exception]] = field(default_factory=list)
    total_time: float = 0.0

    @property
    def success_count(self) -> int:
        return len(self.successful)

    @property
    def failure_count(self) -> int:
        return len(self.failed)


class ProgressTracker:
    """
    Thread-safe progress tracker for parallel operations.
    """

    def __init__(self, total: int, desc: str = "Processing",
                 show_progress: bool = True):
        """
        Args:
            total: Total number of items to process
            desc: Description for progress bar
            show_progress: Whether to show progress bar
        """
        self.total = total
        self.desc = desc
        self.completed = 0
        self._lock = threading.Lock()
        self._pbar = tqdm(total=total, desc=desc, unit="items", dynamic_ncols=True) if show_progress else None

    def update(self, n: int = 1):
        """Update progress by n items."""
        with self._lock:
            self.completed += n
            if self._pbar:
                self._pbar.update(n)

    def close(self):
        if self._pbar:
            self._pbar.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


def parallel_map(func: Callable[[Any], T],
                 items: Sequence[Any],
                 show_progress: bool = False,
                 max_workers: Optional[int] = None,
                 raise_on_error: bool = True,
                 desc: Optional[str] = None) -> ProcessingResult[T]:
    """
    Map a function over items on a thread pool.

    Results keep the input order, so callers that concatenate them get the
    same output for any worker count.

    Args:
        func: Function to apply to each item
        items: Items to process
        show_progress: Whether to show a progress bar
        max_workers: Worker threads (None = resolve_worker_count())
        raise_on_error: Re-raise the first failure (by input order)
        desc: Progress bar label

    Returns:
        ProcessingResult with results in input order

    Example:
        > result = parallel_map(lambda chunk: chunk.sum(), chunks)
        > totals = result.successful
    """
    if not items:
        return ProcessingResult()

    workers = max_workers or resolve_worker_count()
    start_time = time.time()
    outputs: List[Any] = [None] * len(items)
    errors: List[Tuple[int, Any, Exception]] = []

    with ProgressTracker(len(items), desc or f"Processing {len(items)} items", show_progress) as tracker:
        if workers == 1 or len(items) == 1:
            for index, item in enumerate(items):
                try:
                    outputs[index] = func(item)
                except Exception as e:
                    errors.append((index, item, e))
                finally:
                    tracker.update()
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
                future_to_index = {executor.submit(func, item): index for index, item in enumerate(items)}
                for future in concurrent.futures.as_completed(future_to_index):
                    index = future_to_index[future]
                    try:
                        outputs[index] = future.result()
                    except Exception as e:
                        errors.append((index, items[index], e))
                    finally:
                        tracker.update()

    errors.sort(key=lambda entry: entry[0])
    if errors and raise_on_error:
        index, _, error = errors[0]
        logger.debug(f"Item {index} failed: {error}")
        raise error

    failed_indices = {index for index, _, _ in errors}
    result = ProcessingResult[T](
        successful=[out for index, out in enumerate(outputs) if index not in failed_indices],
        failed=errors,
        total_time=time.time() - start_time,
    )
    logger.debug(f"Parallel map completed: {result.success_count} successful, "
                 f"{result.failure_count} failed, {workers} workers, {result.total_time:.2f}s")
    return result
