"""Run the acceptance suite and write validation.json; exits non-zero on any failure."""
import sys

from blockade.main import main

if __name__ == "__main__":
    sys.exit(main(["validate", *sys.argv[1:]]))
