import numpy as np
import pytest

from attrition_pqr.panel import PanelDataset


@pytest.fixture
def small_panel():
    """2 subjects x 3 periods, subject 1 drops after period 2."""
    response = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, np.nan]])
    mask = np.array([[1, 1, 1], [1, 1, 0]], dtype=np.int8)
    x = np.array([[0.5, 1.0, 1.5], [2.0, 2.5, 3.0]])
    covars = np.stack([np.ones((2, 3)), x], axis=2)
    treat = np.zeros((2, 3, 0))
    return PanelDataset(n_subjects=2, n_periods=3, response=response,
                        treat=treat, covars=covars, mask=mask)


def make_panel(response, mask, x=None, treat=None):
    response = np.asarray(response, dtype=float)
    mask = np.asarray(mask, dtype=np.int8)
    n, t_len = response.shape
    if x is None:
        x = np.arange(n * t_len, dtype=float).reshape(n, t_len)
    covars = np.stack([np.ones((n, t_len)), np.asarray(x, dtype=float)], axis=2)
    if treat is None:
        treat = np.zeros((n, t_len, 0))
    response = np.where(mask == 1, response, np.nan)
    return PanelDataset(n_subjects=n, n_periods=t_len, response=response,
                        treat=treat, covars=covars, mask=mask)
