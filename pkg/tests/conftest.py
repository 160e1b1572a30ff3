import os
import subprocess
import sys

import pytest

ACCEPTANCE_LINES = []

_RUNNER = (
    "import sys\n"
    "from skl.cli import main\n"
    "from skl.presets import list_presets\n"
    "codes = [main(['preset', n, '--out', sys.argv[1]]) for n, _ in list_presets()]\n"
    "sys.exit(max(codes))\n"
)


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Every preset run twice through the CLI, in separate interpreters."""
    roots = [tmp_path_factory.mktemp(f"run{i}") for i in (1, 2)]
    procs = []
    for i, root in enumerate(roots):
        env = {**os.environ, "PYTHONHASHSEED": str(i + 11)}
        procs.append(subprocess.Popen([sys.executable, "-c", _RUNNER, str(root)], env=env,
                                      stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True))
    codes = []
    for p in procs:
        _, err = p.communicate(timeout=1800)
        codes.append((p.returncode, err))
    return roots, codes


def record(number, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
