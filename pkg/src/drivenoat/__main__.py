import sys

from drivenoat.cli import main

sys.exit(main())
