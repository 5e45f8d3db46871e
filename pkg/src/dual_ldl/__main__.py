import sys

from dual_ldl.cli import main

sys.exit(main())
