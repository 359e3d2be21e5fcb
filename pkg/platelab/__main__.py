import sys

from platelab.cli import main

sys.exit(main())
