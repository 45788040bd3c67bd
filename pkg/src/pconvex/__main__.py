import sys

from pconvex.cli import main

sys.exit(main())
