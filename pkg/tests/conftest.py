import functools
import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from bsrone.experiments import default_config, run  # noqa: E402

RESULTS = {}


def record(number, passed, detail):
    """Remember one acceptance verdict; echoed again in the terminal summary."""
    line = f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return passed


@functools.lru_cache(maxsize=None)
def experiment(exp, seed):
    return run(default_config(exp).replace(seed=seed))


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
