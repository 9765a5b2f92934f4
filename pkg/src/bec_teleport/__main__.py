import sys

from bec_teleport.cli import main

sys.exit(main())
