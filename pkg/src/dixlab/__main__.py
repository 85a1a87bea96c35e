import sys

from dixlab.cli import main

sys.exit(main())
