import sys

from nldof.cli import main

sys.exit(main())
