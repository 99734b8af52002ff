"""Command-line entry: read one SMT-LIB2 script on stdin, answer on stdout.

Errors go to stderr with exit code 1; a clean run exits 0 after printing
sat/unsat and any requested values.
"""

import sys

from .qfbv import SolverInputError, run_script


def main() -> int:
    text = sys.stdin.read()
    try:
        out = run_script(text)
    except SolverInputError as e:
        print(f"(error \"{e}\")", file=sys.stderr)
        return 1
    except RecursionError:
        print("(error \"term too deep\")", file=sys.stderr)
        return 1
    sys.stdout.write(out)
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
