"""Bundled example chains."""

from importlib.resources import as_file, files

from .io import read_matrix


def load_southern_women():
    """Random walk on the Davis Southern Women attendance data.

    An 18 x 18 chain: rows are the 18 women, columns 0-13 the 14 events and
    columns 14-17 are zero padding, so every woman moves to an event she
    attended with equal probability. Women 0-8 and the events they reach
    form one closed class; the remaining women are transient.
    """
    with as_file(files(__package__) / "data" / "southern_women.mtx") as path:
        return read_matrix(path)[0]
