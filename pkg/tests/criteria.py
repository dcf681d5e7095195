"""Shared record of acceptance outcomes, printed at the end of the session."""

import functools
import time

RESULTS = {}


def criterion(number, title):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException as exc:
                RESULTS[number] = (title, False, time.perf_counter() - t0, str(exc).splitlines()[0][:120])
                print(f"criterion {number} ({title}): FAIL")
                raise
            RESULTS[number] = (title, True, time.perf_counter() - t0, "")
            print(f"criterion {number} ({title}): PASS")
        return wrapper
    return deco
