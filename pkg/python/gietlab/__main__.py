import sys

from gietlab.lab.cli import main

sys.exit(main())
