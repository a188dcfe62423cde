"""Shared fixtures: the shipped pipeline runs, executed once per session
and reused by the acceptance criteria."""

import pytest

from pdeeplearn.pipeline import run_pipeline, shipped_config

DOMAINS = ("gripper", "kiln", "battery")


@pytest.fixture(scope="session")
def pipeline_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    return {name: run_pipeline(shipped_config(name), root) for name in DOMAINS}


@pytest.fixture(scope="session")
def gripper_rerun(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs-again")
    return run_pipeline(shipped_config("gripper"), root)
