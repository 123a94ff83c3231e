import sys

from stlmine.cli import main

sys.exit(main())
