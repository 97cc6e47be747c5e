import numpy as np
import pytest

from ssam.core import UsageError
from ssam.validate import (
    chain_suite,
    composition_suite,
    gap_suite,
    run_suites,
)


def test_gap_suite_small_run_passes_and_reports():
    lines = []
    assert gap_suite(n_instances=300, seed=1, emit=lines.append)
    assert lines[-1] == "gap.pass = true"
    keys = {ln.split(" = ")[0] for ln in lines}
    assert {"gap.instances", "gap.max_eta", "gap.max_optimality_inequality",
            "gap.max_grid_error"} <= keys
    assert all(ln.startswith("gap.") for ln in lines)


def test_chain_suite_small_run_passes():
    lines = []
    assert chain_suite(n_paths=12, h=1e-3, seed=2, emit=lines.append)
    assert lines[-1] == "chain.pass = true"
    # per-family worst-case ratios are reported and below 1
    ratios = [float(ln.split(" = ")[1]) for ln in lines
              if ".max_gap_over_tol" in ln]
    assert len(ratios) == 4
    assert max(ratios) < 1.0


def test_chain_suite_catches_wrong_selections():
    # feeding deliberately corrupted selections through the hook must
    # make the suite fail loudly, proving it can detect a broken rule
    def corrupt(sel):
        import dataclasses
        fixes = {"g": lambda x, _g=sel.g: -_g(x)}
        if sel.g_many is not None:
            fixes["g_many"] = lambda P, _gm=sel.g_many: -_gm(P)
        return dataclasses.replace(sel, **fixes)

    lines = []
    ok = chain_suite(n_paths=4, h=1e-3, seed=2, emit=lines.append,
                     selection_transform=corrupt)
    assert not ok
    assert lines[-1] == "chain.pass = false"
    assert any(ln.endswith("within_tolerance = FAIL") for ln in lines)


def test_composition_suite_passes():
    lines = []
    assert composition_suite(seed=3, emit=lines.append)
    assert lines[-1] == "composition.pass = true"


def test_run_suites_unknown_name():
    with pytest.raises(UsageError):
        run_suites(names=["bogus"])


def test_run_suites_filters(capsys):
    collected = []
    ok = run_suites(names=["composition"], emit=collected.append)
    assert ok
    assert collected and all(ln.startswith("composition.") for ln in collected)
