import pytest

mp = pytest.importorskip("mpmath")

import oracle_values  # noqa: E402
import test_acceptance  # noqa: E402
import test_correlators  # noqa: E402
import test_epr_state  # noqa: E402
import test_numerics  # noqa: E402
import test_observables  # noqa: E402

FROZEN = {
    "R_N10": test_epr_state.R_N10,
    "S2_N10": test_epr_state.S2_N10,
    "COV_N10": test_epr_state.COV_N10,
    "RATIO_11": test_epr_state.RATIO_11,
    "E00_N10": test_correlators.E00_N10,
    "E11_N10": test_correlators.E11_N10,
    "DSTAR_N10": test_correlators.DSTAR_N10,
    "BSTAR_N10": test_correlators.BSTAR_N10,
    "ERF1": test_numerics.ERF1,
    "DAWSON_01": test_numerics.DAWSON_01,
    "ORTHANT_SHIFTED": test_numerics.ORTHANT_SHIFTED,
    "R_COHERENT": test_observables.R_COHERENT,
    "PLATEAU": test_acceptance.PLATEAU,
}


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_frozen_constant_matches_oracle(name):
    assert FROZEN[name] == pytest.approx(float(oracle_values.values()[name]), rel=1e-15)
