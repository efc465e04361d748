import sys

from .lab import main

if __name__ == "__main__":
    sys.exit(main())
