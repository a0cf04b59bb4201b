"""Full reproduction into one run directory; prints the summary.

    python3 scripts/reproduce_all.py [--config run.cfg] [--out runs/full]
"""

import sys

from lorenz_spec.cli import main

if __name__ == "__main__":
    # global options (--config, --out, --seed) come before the subcommand
    sys.exit(main([*sys.argv[1:], "reproduce-all"]))
