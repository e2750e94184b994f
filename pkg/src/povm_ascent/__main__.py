"""Allow running povm-ascent as: python -m povm_ascent."""

from povm_ascent.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
