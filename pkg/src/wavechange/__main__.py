import sys

from wavechange.cli import main

sys.exit(main())
