"""Acceptance gate: each criterion prints one PASS/FAIL line and asserts.

The checks live in pwmcycle.verify so the CLI ``verify`` command and this
module run the same code.
"""

import importlib.resources as resources
import os
import subprocess
import sys
import time

from pwmcycle import verify


def _report(criterion, checks):
    ok = all(c.passed for c in checks)
    worst = max((c.max_dev / c.threshold for c in checks), default=0.0)
    print("ACCEPTANCE %-28s %s (worst dev/threshold %.3e)"
          % (criterion, "PASS" if ok else "FAIL", worst))
    for c in checks:
        print("  " + c.line())
    assert ok, "criterion failed: %s" % criterion


def test_criterion_1_propagator_oracles():
    _report("1 propagator", [
        verify.check_propagator_quadrature(),
        verify.check_propagator_semigroup(),
        verify.check_propagator_derivatives(),
    ])


def test_criterion_2_closed_form_and_fixed_point():
    _report("2 cycle closed form", [
        verify.check_compose_expansion(),
        verify.check_fixed_point_invariance(),
    ])


def test_criterion_3_four_logic_jacobians():
    _report("3 jacobian agreement", [verify.check_jacobian_blocks_fd()])


def test_criterion_4_subharmonic_boundary():
    _report("4 subharmonic boundary", [
        verify.check_subharmonic_boundary(),
        verify.check_subharmonic_oracle(),
        verify.check_slope_compensation(),
    ])


def test_criterion_5_tf_vs_injection():
    _report("5 TF vs injection", [verify.check_tf_injection()])


def test_criterion_6_duty_mapping():
    _report("6 duty mapping", [verify.check_duty_mapping()])


def test_criterion_7_distillation():
    _report("7 distillation", [verify.check_distillation()])


def test_criterion_8_cli_verify_on_shipped_configs():
    configs = ["buck_cot.cfg", "buck_coft.cfg", "buck_pcm_trailing.cfg",
               "buck_valley_leading.cfg"]
    t0 = time.time()
    for name in configs:
        path = resources.files("pwmcycle").joinpath("data", name)
        proc = subprocess.run(
            [sys.executable, "-m", "pwmcycle.cli", "verify",
             "--config", str(path)],
            capture_output=True, text=True, env=os.environ.copy(),
        )
        tail = "\n".join(proc.stdout.splitlines()[-3:])
        print("verify %-28s exit=%d  %s" % (name, proc.returncode, tail))
        assert proc.returncode == 0, proc.stdout + proc.stderr
    elapsed = time.time() - t0
    print("ACCEPTANCE 8 verify runtime: %.1f s" % elapsed)
    assert elapsed < 300.0
