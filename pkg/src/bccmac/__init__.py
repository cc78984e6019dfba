"""Rate regions and random-coding simulation for a broadcast -> multiple-access cascade."""
__version__ = "0.1.0"
