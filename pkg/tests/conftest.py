import os
import sys
import textwrap
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ADD_CODE = "int add(int a, int b) { return a + b; }"

# A small repository: ipc/ holds one gold+steps function, one plain-summary
# function and one uncommented function; lib/ holds a file with no header
# comments at all; and a header file that must be ignored.
FIXTURE_FILES = {
    "ipc/msg.c": textwrap.dedent("""\
        // SPDX-License-Identifier: GPL-2.0
        #include <linux/msg.h>

        static int counter;

        /**
         * msg_add - add two message counts
         * @a: first count
         * @b: second count
         *
         * Return: the sum of @a and @b
         */
        int msg_add(int a, int b)
        {
        \t/* widen first */
        \tlong s = a;
        \t// then add
        \treturn s + b;
        }

        /* reset the counter */
        static void msg_reset(void)
        {
        \tcounter = 0;
        }

        static int msg_peek(void)
        {
        \treturn counter;
        }
        """),
    "ipc/util.h": "int msg_add(int a, int b);\n",
    "lib/plain.c": textwrap.dedent("""\
        int twice(int x)
        {
        \treturn x * 2;
        }
        """),
}


def write_repo(root: Path, files=FIXTURE_FILES) -> Path:
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return root


@pytest.fixture
def fixture_repo(tmp_path):
    return write_repo(tmp_path / "repo")


def kernel_root():
    """Root of a Linux checkout given by LINUX_SRC, or None."""
    value = os.environ.get("LINUX_SRC")
    return Path(value) if value else None


# -- acceptance report ------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
