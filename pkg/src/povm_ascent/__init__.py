"""povm-ascent: accessible information of quantum ensembles by iterative POVM ascent."""

__version__ = "0.1.0"
