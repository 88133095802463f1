"""Independent reference implementations used to cross-check the library."""
from __future__ import annotations

UNIT = {"left_of": (-1.0, 0.0), "right_of": (1.0, 0.0), "above": (0.0, -1.0), "below": (0.0, 1.0)}


def first_match_links(boxes, ref_indices, relation, delta, width=None, height=None):
    """Every (reference, detection) pair tested for probe containment; first in input order wins."""
    links = []
    ux, uy = UNIT[relation]
    for r in ref_indices:
        x1, y1, x2, y2 = boxes[r]
        px = (x1 + x2) / 2 + delta * ux
        py = (y1 + y2) / 2 + delta * uy
        if px < 0 or py < 0 or (width is not None and px > width) or (height is not None and py > height):
            continue
        hits = [j for j, b in enumerate(boxes) if j != r and b[0] <= px <= b[2] and b[1] <= py <= b[3]]
        if hits:
            links.append((r, hits[0]))
    return links


def sample_sd(values):
    n = len(values)
    mean = sum(values) / n
    return (sum((v - mean) ** 2 for v in values) / (n - 1)) ** 0.5
