import sys

from ap3.cli import main

sys.exit(main())
