"""Reference records for the blue-cube worked example and a two-object detector dump."""
from __future__ import annotations

import json
from importlib import resources

from vrcsolve.harness import Challenge

# Two-record detector dump (a cylinder and the digit 6).
DUMP_RECORDS = [
    {"Object": "cylinder", "location": [366.9, 165.7],
     "bbox": [335.7237854003906, 127.53125762939453, 398.072265625, 203.88307189941406]},
    {"Object": "6", "location": [434.3, 171.2],
     "bbox": [401.0405578613281, 118.474853515625, 467.6160888671875, 223.9849090576172]},
]

# Merged letter-T candidates of the worked example.
T_CANDIDATES = [
    {"Object": ["T", "blue", "side"], "location": [442.5, 168.2],
     "bbox": [394.7731, 101.0462, 490.2843, 235.4473]},
    {"Object": ["T", "front", "red"], "location": [358.8, 192.3],
     "bbox": [292.8094, 114.6200, 424.7109, 270.0581]},
    {"Object": ["T", "red", "front"], "location": [56.1, 310.4],
     "bbox": [17.8713, 265.3660, 94.3498, 355.4301]},
    {"Object": ["T", "green", "front"], "location": [99.3, 142.5],
     "bbox": [58.9634, 93.5350, 139.6709, 191.4095]},
]

# Compact augmented set with the inferred target tag.
AUGMENTED = [
    {"Object": ["T", "blue", "side"], "location": [442.5, 168.2]},
    {"Object": ["blue", "cube", "side", "!maybe result"], "location": [442.2, 267.8]},
    {"Object": ["T", "front", "red"], "location": [358.8, 192.3]},
    {"Object": ["T", "red", "front"], "location": [56.1, 310.4]},
    {"Object": ["T", "green", "front"], "location": [99.3, 142.5]},
]

# The detector records that are printed in full for the worked example.
VISIBLE_DETECTIONS = [
    {"Object": "T", "location": [442.5, 168.2], "bbox": [394.7731, 101.0462, 490.2843, 235.4473]},
    {"Object": "T", "location": [358.8, 192.3], "bbox": [292.8094, 114.6200, 424.7109, 270.0581]},
    {"Object": "blue", "location": [442.2, 267.8], "bbox": [388.4220, 203.7325, 496.0359, 331.7915]},
    {"Object": "T", "location": [56.1, 310.4], "bbox": [17.8713, 265.3660, 94.3498, 355.4301]},
    {"Object": "cube", "location": [442.2, 267.3], "bbox": [387.9681, 203.1617, 496.4134, 331.5254]},
    {"Object": "side", "location": [191.2, 171.7], "bbox": [123.6435, 106.6081, 258.7856, 236.8480]},
    {"Object": "red", "location": [252.0, 294.1], "bbox": [178.4103, 209.2727, 325.6867, 378.9393]},
    {"Object": "front", "location": [56.6, 310.4], "bbox": [19.0843, 265.4105, 94.0871, 355.3325]},
]

EXAMPLE_QUESTION = "Please click on the object directly below the letter 'T'."
TRUTH = (0.5670, 0.7352, 0.4469, 0.7288)


def load_example() -> Challenge:
    doc = json.loads(resources.files("vrcsolve").joinpath("data", "blue_cube_case.json").read_text("utf-8"))
    return Challenge.from_wire(doc)


