import asyncio
import shutil

import pytest

from app.core.errors import LitmusError
from app.core.explorer import Backend
from app.core.lang import MemoryModelId
from app.models.litmus import Verdict
from app.services.litmus_runner import (
    EXIT_CAP,
    EXIT_MISMATCH,
    EXIT_OK,
    EXIT_USAGE,
    RunOptions,
    backends_disagree,
    is_cap_error,
    legal_backends,
    load_corpus,
    run_corpus,
    run_corpus_async,
    run_test,
    run_test_all,
    summarize,
)
from app.utils.litmus_parser import parse_litmus
from tests.conftest import SB_SOURCE

MP_REL_ACQ = """\
name MP+rel+acq
model rcpc
shared x y
local P1 r1 r2
thread P0 { x := 1; rel y := 1 }
thread P1 { acq r1 := y; r2 := x }
forbidden (P1:r1 = 1 && P1:r2 = 0)
expect forbidden
"""


def test_sb_is_allowed_under_tso_with_witness(sb_test) -> None:
    report = run_test(sb_test)
    assert report.verdict == Verdict.ALLOWED.value
    assert report.match
    assert report.witness == {"x": 1, "y": 1, "P0:r1": 0, "P1:r2": 0}
    assert report.states > 0
    assert report.error is None


def test_model_override(sb_test) -> None:
    report = run_test(sb_test, options=RunOptions(model=MemoryModelId.SC))
    assert report.model == "sc"
    assert report.verdict == "forbidden"
    assert not report.match
    assert report.witness is None


def test_forbidden_condition_has_no_witness() -> None:
    report = run_test(parse_litmus(MP_REL_ACQ))
    assert report.verdict == "forbidden"
    assert report.match
    assert report.witness is None
    weakened = run_test(parse_litmus(MP_REL_ACQ), options=RunOptions(model=MemoryModelId.G))
    assert weakened.verdict == "allowed"
    assert weakened.witness is None


def test_report_field_order(sb_test) -> None:
    keys = list(run_test(sb_test).model_dump(mode="json"))
    assert keys == ["name", "model", "backend", "verdict", "expect", "match", "witness", "states", "millis", "error"]


def test_backend_errors_are_recorded() -> None:
    report = run_test(parse_litmus(MP_REL_ACQ), Backend.STOREBUFFER)
    assert report.error.startswith("IncompatibleBackend")
    assert report.verdict is None
    assert not report.match


def test_cap_is_reported(sb_test) -> None:
    report = run_test(sb_test, options=RunOptions(cap=2))
    assert is_cap_error(report)
    assert summarize([report]).exit_code == EXIT_CAP


def test_legal_backends(sb_test) -> None:
    assert legal_backends(sb_test) == [Backend.PSEQ, Backend.PIPELINE, Backend.STOREBUFFER]
    assert legal_backends(parse_litmus(MP_REL_ACQ)) == [Backend.PSEQ, Backend.PIPELINE]
    assert legal_backends(sb_test, MemoryModelId.PAR) == [Backend.PSEQ]


def test_all_backends_agree_on_sb(sb_test) -> None:
    reports = run_test_all(sb_test)
    assert [r.backend for r in reports] == ["pseq", "pipeline", "storebuffer"]
    assert not backends_disagree(reports)
    assert all(r.match for r in reports)


def test_whole_corpus_matches(corpus_dir) -> None:
    summary = run_corpus(corpus_dir)
    assert summary.errors == []
    assert summary.total >= 20
    assert summary.failed == 0, [r.name for r in summary.reports if not r.match]
    assert summary.exit_code == EXIT_OK


def test_corpus_verdicts_are_backend_independent(corpus_dir) -> None:
    summary = run_corpus(corpus_dir, backend=None)
    assert summary.failed == 0, [(r.name, r.backend, r.error) for r in summary.reports if not r.match]
    by_name = {}
    for report in summary.reports:
        by_name.setdefault(report.name, set()).add(report.verdict)
    assert all(len(verdicts) == 1 for verdicts in by_name.values())


def test_corpus_output_is_independent_of_jobs(corpus_dir) -> None:
    def stable(summary):
        return [r.model_dump(exclude={"millis"}) for r in summary.reports]

    assert stable(run_corpus(corpus_dir, jobs=1)) == stable(run_corpus(corpus_dir, jobs=4))


def test_empty_corpus(tmp_path) -> None:
    summary = run_corpus(str(tmp_path))
    assert summary.total == 0
    assert summary.exit_code == EXIT_OK


def test_wrong_expectation_fails(tmp_path) -> None:
    (tmp_path / "SB.litmus").write_text(SB_SOURCE.replace("expect allowed", "expect forbidden"), encoding="utf-8")
    (tmp_path / "MP.litmus").write_text(MP_REL_ACQ, encoding="utf-8")
    summary = run_corpus(str(tmp_path))
    assert summary.total == 2
    assert summary.failed == 1
    assert summary.exit_code == EXIT_MISMATCH


def test_parse_errors_do_not_stop_the_run(tmp_path, corpus_dir) -> None:
    shutil.copy(f"{corpus_dir}/SB.tso.litmus", tmp_path / "SB.tso.litmus")
    (tmp_path / "broken.litmus").write_text("name broken\nmodel vax\n", encoding="utf-8")
    (tmp_path / "README.txt").write_text("not a test", encoding="utf-8")
    tests, errors = load_corpus(str(tmp_path))
    assert [t.name for t in tests] == ["SB.tso"]
    assert len(errors) == 1 and "broken.litmus" in errors[0]
    summary = run_corpus(str(tmp_path))
    assert summary.passed == 1
    assert summary.exit_code == EXIT_USAGE


def test_missing_directory(tmp_path) -> None:
    with pytest.raises(LitmusError):
        run_corpus(str(tmp_path / "nope"))


def test_async_corpus_reports_each_test(tmp_path) -> None:
    (tmp_path / "SB.litmus").write_text(SB_SOURCE, encoding="utf-8")
    seen = []

    async def on_report(report) -> None:
        seen.append(report.backend)

    summary = asyncio.run(run_corpus_async(str(tmp_path), None, jobs=2, on_report=on_report))
    assert sorted(seen) == ["pipeline", "pseq", "storebuffer"]
    assert [r.backend for r in summary.reports] == ["pipeline", "pseq", "storebuffer"]
