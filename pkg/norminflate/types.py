from typing import Sequence, Tuple, Union

import numpy as np

Frequency = Tuple[int, int, int]
Vector = Union[Sequence[float], np.ndarray]
