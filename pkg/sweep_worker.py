#!/usr/bin/env python3
"""Threaded execution of independent sweep points.

The numba kernels release the GIL, so plain threads run simulations in
parallel. Workers report through a results queue using status dicts; the
caller's thread drains it and logs progress.
"""
import logging
import queue
import threading

logger = logging.getLogger(__name__)


def sweep_worker(task_queue, run_point, results_queue, cancel_event):
    """Worker loop: evaluate run_point(key) for keys pulled from task_queue."""
    errors_occurred = False
    while not cancel_event.is_set():
        try:
            key = task_queue.get_nowait()
        except queue.Empty:
            break
        try:
            value = run_point(key)
        except Exception as e:  # reported to the consumer, which re-raises
            errors_occurred = True
            results_queue.put({"status": "point_failed", "key": key, "error": e})
            continue
        results_queue.put({"status": "point_done", "key": key, "value": value})
    if cancel_event.is_set():
        results_queue.put({"status": "cancelled"})
    else:
        results_queue.put({"status": "complete", "errors_occurred": errors_occurred})


def run_sweep(keys, run_point, jobs: int = 1, cancel_event=None, label: str = "sweep"):
    """Evaluate run_point over keys; returns [(key, value)] sorted by key.

    The first failure cancels the remaining points and is re-raised.
    """
    keys = list(keys)
    cancel_event = cancel_event or threading.Event()
    task_queue = queue.Queue()
    for key in keys:
        task_queue.put(key)
    results_queue = queue.Queue()

    n_workers = max(1, min(jobs, len(keys)))
    threads = [threading.Thread(target=sweep_worker,
                                args=(task_queue, run_point, results_queue, cancel_event),
                                name=f"{label}-{i}", daemon=True)
               for i in range(n_workers)]
    logger.info("[%s] %d points on %d worker(s)", label, len(keys), n_workers)
    for t in threads:
        t.start()

    results = {}
    errors = []
    finished = 0
    while finished < n_workers:
        message = results_queue.get()
        status = message["status"]
        if status == "point_done":
            results[message["key"]] = message["value"]
            logger.info("[%s] point %s done (%d/%d)", label, message["key"], len(results), len(keys))
        elif status == "point_failed":
            errors.append(message)
            logger.error("[%s] point %s failed: %s", label, message["key"], message["error"])
            cancel_event.set()
        else:
            finished += 1
    for t in threads:
        t.join()

    logger.info("[%s] complete, errors_occurred=%s", label, bool(errors))
    if errors:
        raise errors[0]["error"]
    return sorted(results.items())
