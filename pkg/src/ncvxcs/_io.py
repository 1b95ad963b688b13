"""Tiny output helper shared by the CSV/JSON writers."""

from contextlib import contextmanager


@contextmanager
def text_sink(target):
    """Yield a writable text handle for a path or an already-open file."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh
