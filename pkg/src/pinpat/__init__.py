"""pinpat: pinned point patterns, progression-free sets and the thin-cone counterexample."""

__version__ = "0.1.0"
