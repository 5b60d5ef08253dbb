import doctest

import pytest

from longterm_iv import estimators, harness, series


@pytest.mark.parametrize("module", [estimators, harness, series])
def test_docstring_examples(module):
    result = doctest.testmod(module, optionflags=doctest.ELLIPSIS)
    assert result.failed == 0
