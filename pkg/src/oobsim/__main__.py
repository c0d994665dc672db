import sys

from oobsim.cli import main

sys.exit(main())
