import sys

from trivalent.cli import main

sys.exit(main())
