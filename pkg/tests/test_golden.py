import json
from pathlib import Path

import pytest

from typicality.scenarios import load_config, run_scenario

GOLDEN = Path(__file__).parent / "golden"


def strip(rec):
    """Numbers compared with a tolerance, everything else exactly."""
    if isinstance(rec, dict):
        return {k: strip(v) for k, v in rec.items()}
    if isinstance(rec, list):
        return [strip(v) for v in rec]
    return pytest.approx(rec, abs=1e-12) if isinstance(rec, float) else rec


@pytest.mark.parametrize("path", sorted(GOLDEN.glob("*.report.json")), ids=lambda p: p.name.split(".")[0])
def test_exact_report_matches_golden(path):
    name = path.name.split(".")[0]
    got = run_scenario(load_config(name)).to_dict()
    assert got == strip(json.loads(path.read_text()))
