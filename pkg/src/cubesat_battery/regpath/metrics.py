import numpy as np

from ..errors import ShapeError, UnidentifiableError


def r2_score(y, yhat):
    """Coefficient of determination ``1 - SS_res / SS_tot``."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ShapeError(f"y {y.shape} and yhat {yhat.shape} must be equal-length 1-D series")
    if y.size < 2:
        raise ShapeError("R^2 needs at least 2 samples")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise UnidentifiableError("R^2 undefined for a constant target")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot
