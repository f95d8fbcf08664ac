from drawdown_sv.checks import CheckResult, format_report
from drawdown_sv.config import RunConfig


def test_report_lines_and_summary():
    results = [CheckResult("C1", "first", True, "0", "0"), CheckResult("M2", "second", False, "3", "<= 1")]
    text = format_report(results, RunConfig())
    lines = text.splitlines()
    assert lines[0].startswith("# drawdown_sv ")
    assert "PASS C1 first: measured 0; required 0" in lines
    assert "FAIL M2 second: measured 3; required <= 1" in lines
    assert lines[-1] == "SUMMARY 1/2 checks passed"
    assert text == format_report(results, RunConfig())
