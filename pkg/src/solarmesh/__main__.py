import sys

from solarmesh.cli import main

sys.exit(main())
