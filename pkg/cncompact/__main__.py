import sys

from cncompact.cli import main

sys.exit(main())
