import xml.etree.ElementTree as ET

import numpy as np

from crnc.timing import rail_pairs, timing_svg


def test_rail_pairs():
    assert rail_pairs(["Y", "Y_bar", "Z", "A_bar", "A"]) == [("Y", "Y_bar"), ("Z", None), ("A", "A_bar")]
    assert rail_pairs(["Q_bar"]) == [("Q_bar", None)]


def test_svg_lanes_and_dashes():
    t = np.linspace(0, 1, 3000)
    svg = timing_svg(t, {"Y": np.sin(t) ** 2, "Y_bar": np.cos(t) ** 2, "Z": t}, title="a < b")
    root = ET.fromstring(svg)
    lines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(lines) == 3
    assert sum("stroke-dasharray" in e.attrib for e in lines) == 1
    assert all(len(e.attrib["points"].split()) <= 1500 for e in lines)
