import sys

from qndsim.cli import main

sys.exit(main())
