import io

import pytest

from kahlerlab.errors import OutOfDomain
from kahlerlab.verify import (
    ALL_TAGS,
    CHECK_CSV_HEADER,
    all_passed,
    run_checks,
    write_check_csv,
)


def test_tag_subsets_and_csv_shape():
    results = run_checks(tags=["numerics", "calabi"])
    assert results and all(r.tag in ("numerics", "calabi") for r in results)
    assert all_passed(results)
    buf = io.StringIO()
    write_check_csv(results, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == CHECK_CSV_HEADER
    assert len(lines) == len(results) + 1


def test_breach_fails_exactly_one_check():
    results = run_checks(tags=["numerics"], breach="quad-exactness")
    failed = [r for r in results if not r.passed]
    assert [r.name for r in failed] == ["quad-exactness"]
    assert not all_passed(results)


def test_unknown_tag_and_breach_rejected():
    with pytest.raises(OutOfDomain):
        run_checks(tags=["nope"])
    with pytest.raises(OutOfDomain):
        run_checks(breach="nope")


def test_all_tags_covered_by_registry():
    results = run_checks(tags=list(ALL_TAGS))
    assert {r.tag for r in results} == set(ALL_TAGS)
