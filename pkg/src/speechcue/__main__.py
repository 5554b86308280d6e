import sys

from speechcue.cli import main

sys.exit(main())
