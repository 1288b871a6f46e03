import numpy as np
import pytest

from convexsym import (GridFunction, ellipsoidal_gauge, euclidean_gauge,
                       parse_gauge, pnorm_gauge, polygonal_gauge)


def disk_grid(nx, fn, radius=1.0):
    """GridFunction sampling fn(X, Y) on the disk of given radius."""
    h = 2.0 * radius / nx
    xs = (np.arange(nx) + 0.5) * h - radius
    X, Y = np.meshgrid(xs, xs)
    mask = X**2 + Y**2 < radius**2
    vals = np.where(mask, fn(X, Y), 0.0)
    return GridFunction(vals, mask, h, (-radius, -radius))


def cone_on_disk(nx):
    return disk_grid(nx, lambda X, Y: 1.0 - np.hypot(X, Y))


def square_grid(nx, fn, side=1.0):
    h = side / nx
    xs = (np.arange(nx) + 0.5) * h
    X, Y = np.meshgrid(xs, xs)
    mask = np.ones_like(X, dtype=bool)
    return GridFunction(fn(X, Y), mask, h, (0.0, 0.0))


def hexagon_vertices():
    k = np.arange(6)
    return np.stack([np.cos(k * np.pi / 3), np.sin(k * np.pi / 3)], axis=1)


def builtin_gauges():
    """The gauge family exercised throughout the tests."""
    return {
        "euclidean": euclidean_gauge(2),
        "ellipse-diag": ellipsoidal_gauge(np.diag([0.25, 4.0])),
        "ellipse-rot": ellipsoidal_gauge(np.array([[1.3, 0.4], [0.4, 0.8]])),
        "pnorm3": pnorm_gauge(3.0),
        "hexagon": polygonal_gauge(hexagon_vertices()),
    }


@pytest.fixture(scope="session")
def gauges():
    return builtin_gauges()


@pytest.fixture(scope="session")
def euclid():
    return euclidean_gauge(2)


@pytest.fixture(scope="session")
def ellipse_gauge():
    return parse_gauge("ellipse:2,0.5")
