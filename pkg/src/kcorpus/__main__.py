import sys

from kcorpus.cli import main

sys.exit(main())
