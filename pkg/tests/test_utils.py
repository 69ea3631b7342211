import numpy as np
import pytest

from sped_select import utils
from sped_select.errors import DataError, DomainError
from sped_select.selection import Method


def test_setting_to_filename():
    assert utils.setting_to_filename(1, 500, 0.1) == "records_d1_n500_p0.1.csv"
    assert utils.setting_to_filename(3, 1000, 0.3, prefix="curves") == (
        "curves_d3_n1000_p0.3.csv"
    )


def test_manifest_path():
    assert utils.manifest_path("out/records.csv") == "out/records.csv.manifest.json"


def test_deduplicate_list():
    assert utils.deduplicate_list([1, 2, 2, 3, 1]) == [1, 2, 3]


def test_parse_sample_lines_skips_blanks_and_comments():
    sample = utils.parse_sample_lines(
        ["# header\n", "1.5\n", "\n", "-2e-1  # trailing note\n", "  3 \n"]
    )
    np.testing.assert_array_equal(sample.values, [1.5, -0.2, 3.0])


def test_parse_sample_lines_names_bad_line():
    with pytest.raises(DataError, match="line 3") as exc_info:
        utils.parse_sample_lines(["1.0", "2.0", "abc", "4.0"])
    assert exc_info.value.line == 3
    assert exc_info.value.exit_code == 2


def test_parse_sample_lines_rejects_nan():
    with pytest.raises(DataError, match="line 2"):
        utils.parse_sample_lines(["1.0", "nan"])


def test_parse_sample_lines_rejects_empty_input():
    with pytest.raises(DataError, match="no observations"):
        utils.parse_sample_lines(["# nothing here", ""])


def test_read_sample_from_file(tmp_path):
    path = tmp_path / "y.txt"
    path.write_text("0.25\n0.5\n", encoding="utf-8")

    assert utils.read_sample(str(path)).n == 2


def test_read_sample_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        utils.read_sample(str(tmp_path / "missing.txt"))


def test_parse_xgrid():
    x = utils.parse_xgrid("-2, 2, 5")
    np.testing.assert_allclose(x, [-2, -1, 0, 1, 2])


@pytest.mark.parametrize("text", ["1,2", "a,b,3", "2,1,10", "0,1,1"])
def test_parse_xgrid_invalid(text):
    with pytest.raises(DomainError):
        utils.parse_xgrid(text)


def test_parse_list_converts_and_deduplicates():
    assert utils.parse_list("100, 500,100", int) == [100, 500]
    assert utils.parse_list("cv,small-n", Method) == [
        Method.CROSS_VALIDATION,
        Method.SMALL_N,
    ]


def test_parse_list_invalid():
    with pytest.raises(DomainError, match="invalid method"):
        utils.parse_list("small-n,sure", Method, "method")
    with pytest.raises(DomainError, match="empty"):
        utils.parse_list("1,,2", int)
