"""Release gate: one test per advertised guarantee, at its stated tolerance.

Each test drives the corresponding self-check, which derives its target
independently (digit expansions, closed-form integrals, exact rational
accounting, frozen-seed statistics) and raises with a diagnostic when the
library misses.  The last test runs the command-line battery twice and
demands byte-identical reports.
"""

import bmext.cli as cli
from bmext import verify

SEED = verify.DEFAULT_SEED


def _passes(check):
    detail = check(SEED)
    assert isinstance(detail, str) and detail


def test_cantor_function_matches_digit_oracle():
    _passes(verify.check_cantor_digits)


def test_scales_vanish_at_their_anchor():
    _passes(verify.check_scale_anchors)


def test_energy_matches_dirichlet_integral_on_smooth_functions():
    _passes(verify.check_smooth_energy)


def test_orthogonal_decomposition_splits_exactly():
    _passes(verify.check_decomposition)


def test_compensators_stay_within_budget():
    _passes(verify.check_compensators)


def test_darning_masses_are_exact():
    _passes(verify.check_darning)


def test_trace_energies_and_membership():
    _passes(verify.check_trace_energies)


def test_hitting_probabilities_match_scale_ratios():
    _passes(verify.check_hitting)


def test_walks_respect_traps_and_confinement():
    _passes(verify.check_walk_structure)


def test_verify_reports_are_byte_identical(capsys):
    argv = ["verify", "--seed", str(SEED), "--deterministic"]
    code1 = cli.main(list(argv))
    out1 = capsys.readouterr().out
    code2 = cli.main(list(argv))
    out2 = capsys.readouterr().out
    assert code1 == 0 and code2 == 0
    assert out1 == out2
    assert "10 passed, 0 failed" in out1
