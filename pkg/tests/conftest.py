import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from criteria import RESULTS  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        title, ok, secs, why = RESULTS[n]
        line = f"criterion {n} ({title}): {'PASS' if ok else 'FAIL'} in {secs:.1f} s"
        terminalreporter.write_line(line + (f"  [{why}]" if why else ""))
