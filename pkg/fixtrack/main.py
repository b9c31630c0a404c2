"""Script entry point: python -m fixtrack.main <command> ..."""

import sys

from fixtrack.ui.cli import main

if __name__ == '__main__':
    sys.exit(main())
