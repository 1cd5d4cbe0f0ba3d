import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as an acceptance criterion")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/SKIP line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") not in ("call", "setup"):
                continue
            keywords = getattr(report, "keywords", {})
            if "acceptance" not in keywords:
                continue
            name = report.nodeid.split("::")[-1]
            for mark in getattr(report, "user_properties", []):
                if mark[0] == "acceptance_name":
                    name = mark[1]
            status = {"passed": "PASS", "failed": "FAIL", "error": "FAIL",
                      "skipped": "SKIP"}[outcome]
            lines.append((name, status))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"[{status}] {name}")


@pytest.fixture(autouse=True)
def _record_acceptance_name(request, record_property):
    marker = request.node.get_closest_marker("acceptance")
    if marker and marker.args:
        record_property("acceptance_name", marker.args[0])

from xlt.corpus import Dataset, LanguageTag, SequenceInstance, Split, TaskKind
from xlt.synthdata import build_sentiment_world, sample_sentiment_dataset

ENG = LanguageTag("eng")
DEU = LanguageTag("deu")
FRA = LanguageTag("fra")
TUR = LanguageTag("tur")
RUS = LanguageTag("rus")
ZHO = LanguageTag("zho")
HR = (TUR, RUS, ZHO)


@pytest.fixture(scope="session")
def world():
    return build_sentiment_world(ENG, DEU, seed=0)


@pytest.fixture(scope="session")
def tc_train(world):
    return sample_sentiment_dataset(world, 100, seed=1)


@pytest.fixture(scope="session")
def tc_validation(world):
    return sample_sentiment_dataset(world, 30, seed=2, split=Split.VALIDATION,
                                    id_prefix="v")


def make_tc_dataset(texts_and_labels, language=ENG, split=Split.TRAIN,
                    label_set=("pos", "neg")):
    instances = tuple(
        SequenceInstance(id=str(i), text_a=text, label=label, language=language)
        for i, (text, label) in enumerate(texts_and_labels))
    return Dataset(TaskKind.TC, tuple(label_set), instances, split)
