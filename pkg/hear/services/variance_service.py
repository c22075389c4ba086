"""
Service layer for running variance estimation.

The estimate is a first-order recursive (exponential) filter on the squared
signal. Online use updates it one sample at a time; offline use runs it
forward and then backward over a whole segment.
"""
import logging
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import group_delay, lfilter

from hear.models.config import SmoothingSpec
from hear.models.state import VarianceState
from hear.utils.error_handler import DimensionMismatch, InvalidSmoothingSpec
from hear.utils.validators import Finite, check_signal

logger = logging.getLogger(__name__)


class VarianceService:
    """Service class for variance tracking operations."""

    @staticmethod
    def smoothing_factor(spec: SmoothingSpec) -> float:
        """
        Smoothing factor lambda of the recursive estimate.

        Chosen so that the most recent ``t_est`` seconds carry a share
        ``p_weight`` of the total weight: lambda = (1 - p)^(1 / (t_est * f_s)).

        Args:
            spec: Estimation window, sampling rate and weight share

        Returns:
            lambda in (0, 1)
        """
        return float((1.0 - spec.p_weight) ** (1.0 / spec.window_samples))

    @staticmethod
    def create_state(init: Union[int, ArrayLike], lam: float) -> VarianceState:
        """
        Create a variance state.

        Args:
            init: Channel count (estimates start at zero) or initial s^2 vector
            lam: Smoothing factor

        Returns:
            A fresh VarianceState
        """
        if isinstance(init, (int, np.integer)):
            s2 = np.zeros(int(init), dtype=np.float64)
        else:
            s2 = np.array(init, dtype=np.float64)
        return VarianceState(s2=s2, lam=lam)

    @staticmethod
    def update_variance(state: VarianceState, x: ArrayLike) -> NDArray[np.float64]:
        """
        Fold one sample vector into the estimate: s^2 <- lam*s^2 + (1 - lam)*x^2.

        Args:
            state: The state to update in place
            x: One value per channel

        Returns:
            The updated s^2 vector (the state's own array)

        Raises:
            DimensionMismatch: If x does not hold one value per channel
            NonFiniteInput: If x holds NaN or infinity
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != state.s2.shape:
            raise DimensionMismatch(
                f"Sample has shape {x.shape}, state tracks {state.n_channels} channels"
            )
        Finite(what="sample")(x)
        return _fold(state, x)

    @staticmethod
    def smooth_variance_bidirectional(
        x: ArrayLike,
        lam: float,
        init: Optional[ArrayLike] = None,
        backward_first: bool = False
    ) -> NDArray[np.float64]:
        """
        Smooth x^2 with the recursive filter forward, then backward over the result.

        Without ``init`` the forward pass starts from its first input value and
        the backward pass from the last forward output, so neither pass has a
        start-up transient toward zero.

        Args:
            x: channels x samples (or a single channel) signal segment
            lam: Smoothing factor in (0, 1)
            init: Initial s^2 per channel for both passes
            backward_first: Run the backward pass first

        Returns:
            Smoothed variance with the shape of x

        Raises:
            InvalidSmoothingSpec: If lam is outside (0, 1)
            NonFiniteInput, EmptyInput: If x is not a usable signal
        """
        if not 0 < lam < 1:
            raise InvalidSmoothingSpec(f"Smoothing factor must lie in (0, 1), got {lam}")
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        signal = check_signal(x[np.newaxis] if single else x, what="segment")
        squared = signal * signal

        first_init = None if init is None else np.broadcast_to(
            np.asarray(init, dtype=np.float64), (signal.shape[0],)
        )
        if backward_first:
            out = _recursive_pass(squared[:, ::-1], lam, first_init)[:, ::-1]
            out = _recursive_pass(out, lam, first_init)
        else:
            out = _recursive_pass(squared, lam, first_init)
            out = _recursive_pass(out[:, ::-1], lam, first_init)[:, ::-1]
        return out[0] if single else out

    @staticmethod
    def group_delay(lam: float, f_s: float, freqs: ArrayLike) -> NDArray[np.float64]:
        """
        Group delay (seconds) of one recursive pass at the given frequencies (Hz).

        The DC value is lam / (1 - lam) / f_s.
        """
        _, delay = group_delay(([1.0 - lam], [1.0, -lam]), w=np.asarray(freqs, dtype=np.float64), fs=f_s)
        return np.asarray(delay, dtype=np.float64) / f_s

    @staticmethod
    def dc_group_delay(lam: float, f_s: float) -> float:
        return lam / (1.0 - lam) / f_s


def _fold(state: VarianceState, x: NDArray[np.float64]) -> NDArray[np.float64]:
    s2 = state.s2
    s2 *= state.lam
    s2 += (1.0 - state.lam) * (x * x)
    state.samples_seen += 1
    return s2


def _recursive_pass(
    values: NDArray[np.float64],
    lam: float,
    init: Optional[NDArray[np.float64]]
) -> NDArray[np.float64]:
    """y[n] = lam*y[n-1] + (1 - lam)*v[n] along the last axis, y[-1] = init (or v[0])."""
    start = values[:, 0] if init is None else init
    zi = (lam * start)[:, np.newaxis]
    out, _ = lfilter([1.0 - lam], [1.0, -lam], values, axis=-1, zi=zi)
    return np.asarray(out, dtype=np.float64)
