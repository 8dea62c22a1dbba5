import sys

from dexfrag.cli import main

sys.exit(main())
