import sys

from warehouse_sinr.cli import main


if __name__ == "__main__":
    sys.exit(main())
