import sys

from collapsim.cli import main

sys.exit(main())
