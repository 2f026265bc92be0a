import sys
import os
import json
import pytest
from unittest.mock import patch

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from logic.stieltjes import epsilon_closed_form as _epsilon
from logic.verify import CRITERIA, VerifyReport, _matches, verify


def _flipped(betas, ritz, t):
    return -_epsilon(betas, ritz, t)


class TestRegistry:
    def test_names_unique(self):
        """测试：校验项名字不重复"""
        names = [c.name for c in CRITERIA]
        assert len(names) == len(set(names))
        for expected in ("epsilon_closed_form", "remez", "lucky_breakdown", "bound_chain", "log_experiment"):
            assert expected in names

    def test_filter_matching(self):
        """测试：过滤支持子串和通配符"""
        assert _matches("epsilon_closed_form", "epsilon")
        assert _matches("lucky_breakdown", "*breakdown")
        assert not _matches("remez", "epsilon")
        assert _matches("remez", None)


class TestVerify:
    def test_epsilon_passes(self):
        """测试：只跑 ε 闭式一项，通过并记录耗时"""
        report = verify("epsilon", progress=False)
        assert [r["name"] for r in report.results] == ["epsilon_closed_form"]
        assert report.ok
        assert report.results[0]["seconds"] >= 0

    @patch('logic.stieltjes.epsilon_closed_form', side_effect=_flipped)
    def test_sign_flip_detected(self, mock_eps):
        """测试：ε 闭式符号被改错时该项失败"""
        report = verify("epsilon", progress=False)
        assert not report.ok
        assert report.failed == ["epsilon_closed_form"]
        assert mock_eps.called

    def test_quick_criteria(self):
        """测试：Remez 和 lucky breakdown 两项通过"""
        report = verify("remez", progress=False)
        assert report.ok, report.failed
        report = verify("lucky_breakdown", progress=False)
        assert report.ok, report.to_json()

    def test_exception_becomes_failure(self):
        """测试：校验函数抛出项目异常时记为失败而不是中断"""
        from logic.errors import AccuracyError

        with patch('logic.verify.remez_discrete', side_effect=AccuracyError("boom")):
            report = verify("remez", progress=False)
        assert report.failed == ["remez"]
        assert report.results[0]["failures"][0]["quantity"] == "exception"

    def test_report_json(self):
        """测试：报告可以序列化成 JSON"""
        report = VerifyReport([{"name": "x", "ok": True, "seconds": 0.5, "failures": []}])
        data = json.loads(report.to_json())
        assert data["ok"] is True
        assert data["passed"] == 1
        assert data["total_seconds"] == 0.5

    def test_no_match(self):
        """测试：没有匹配项时结果为空"""
        report = verify("no_such_criterion", progress=False)
        assert report.results == []
        assert report.ok


class TestFullSuite:
    @pytest.mark.parametrize("name", ["bounds_invariants", "pythagorean", "comparison_bounds"])
    def test_remez_backed_criteria(self, name):
        """测试：依赖高次 Remez 的几项在 A1/A2 上跑到 m = 100 也通过"""
        report = verify(name, progress=False)
        assert [r["name"] for r in report.results] == [name]
        assert report.ok, report.to_json()

    def test_component_ratio_records_measurements(self):
        """测试：分量比一项通过，并记录两次运行的实测范围"""
        report = verify("component_ratio", progress=False)
        assert report.ok, report.to_json()
        details = report.results[0]["details"]
        assert set(details) == {"main_A1_inv_sqrt", "main_A2_inv_sqrt"}
        a1 = details["main_A1_inv_sqrt"]
        assert 0.25 <= a1["min"] <= a1["max"] <= 4.0
        assert a1["outside_band"] == []

    def test_all_criteria_pass(self):
        """测试：全新检出后 verify 全部通过"""
        report = verify(progress=False)
        assert report.results
        assert report.ok, report.failed
