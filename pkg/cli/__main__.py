import sys

# capability kinds register on import
import capabilities  # noqa: F401
from cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
