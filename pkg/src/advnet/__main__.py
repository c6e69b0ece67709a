import sys

from advnet.harness.cli import main

sys.exit(main())
