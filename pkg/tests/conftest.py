import math

import numpy as np
import pytest

from trackseg import road_model as rm


def centerline_distance(placed, x, y):
    """Distance of each point to the nearest centerline piece, and that piece's tangent.

    Independent of the library's road-frame code: straights are projected on
    their chord, arcs measured radially from their circle centre.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    best = np.full(len(x), np.inf)
    tangent = np.zeros(len(x))
    side = np.zeros(len(x))
    for p in placed:
        sp = p.geom
        if sp.kind == "arc":
            sign = 1.0 if sp.direction == "left" else -1.0
            cx = p.x0 - sign * sp.radius * math.sin(p.yaw0)
            cy = p.y0 + sign * sp.radius * math.cos(p.yaw0)
            a0 = math.atan2(p.y0 - cy, p.x0 - cx)
            ang = np.arctan2(y - cy, x - cx)
            rel = np.mod(sign * (ang - a0) + 1e-9, 2 * math.pi) - 1e-9
            inside = rel <= sp.angle + 1e-9
            rho = np.hypot(x - cx, y - cy)
            d = np.where(inside, np.abs(rho - sp.radius), np.inf)
            t = ang + sign * math.pi / 2
            sd = sign * (sp.radius - rho)
        else:
            ux, uy = math.cos(p.yaw0), math.sin(p.yaw0)
            s = (x - p.x0) * ux + (y - p.y0) * uy
            inside = (s >= -1e-9) & (s <= sp.road_length + 1e-9)
            sd = -(x - p.x0) * uy + (y - p.y0) * ux
            d = np.where(inside, np.abs(sd), np.inf)
            t = np.full(len(x), p.yaw0)
        upd = d < best
        best[upd] = d[upd]
        tangent[upd] = t[upd]
        side[upd] = sd[upd]
    return best, tangent, side


def angle_diff(a, b):
    return np.abs((np.asarray(a) - np.asarray(b) + np.pi) % (2 * np.pi) - np.pi)


@pytest.fixture(scope="session")
def default_layout():
    return rm.default_layout()


@pytest.fixture(scope="session")
def default_pair(default_layout):
    from trackseg.route_renderer import render_topdown
    return render_topdown(default_layout)


ACCEPTANCE_LOG: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
