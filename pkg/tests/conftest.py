import numpy as np
from hypothesis import strategies as st

from twoway_qkd.edp import BellDiagonal


@st.composite
def bell_states(draw, q11_zero=False):
    w = np.array(draw(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4)))
    if q11_zero:
        w[2] = 0.0
    if w.sum() < 1e-6:
        w[0] = 1.0
    w = w / w.sum()
    w[0] = 1.0 - w[1:].sum()
    return BellDiagonal(*np.clip(w, 0.0, 1.0))
