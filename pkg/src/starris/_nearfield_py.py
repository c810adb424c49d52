"""Pure numpy fallback for the near-field element-sum kernel."""

import numpy as np

_CHUNK = 2048


def near_field_sum(points, elems, weights, wavelength, normal_z, leaning):
    """Return (sum_m w_m F_m exp(j k r_m) / r_m for each point, min distance)."""
    points = np.asarray(points, dtype=float)
    elems = np.asarray(elems, dtype=float)
    weights = np.asarray(weights, dtype=complex)
    k = 2.0 * np.pi / wavelength
    out = np.empty(len(points), dtype=complex)
    dmin = np.inf
    for start in range(0, len(points), _CHUNK):
        d = points[start:start + _CHUNK, None, :] - elems[None, :, :]
        r = np.sqrt(np.einsum("pmi,pmi->pm", d, d))
        if r.size:
            dmin = min(dmin, float(r.min()))
        # r == 0 is rejected by the caller through dmin
        with np.errstate(divide="ignore", invalid="ignore"):
            amp = 1.0 / r
            if leaning:
                amp = amp * 0.5 * (1.0 + normal_z * d[..., 2] / r)
            out[start:start + _CHUNK] = (np.exp(1j * k * r) * amp) @ weights
    return out, dmin
