"""Thin wrapper over adaptive quadrature with explicit failure reporting."""

from __future__ import annotations

import warnings

from scipy import integrate

from .errors import QuadratureError


def adaptive_quad(f, a, b, rtol=1e-10, atol=1e-12, limit=200):
    """Integrate f over [a, b]; raise QuadratureError when unreliable.

    Returns (value, error_estimate).  On failure the exception carries
    the integrator's message and subdivision count so the refinement
    history is not lost.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            out = integrate.quad(f, a, b, epsabs=atol, epsrel=rtol, limit=limit, full_output=1)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(
                f"quadrature on [{a}, {b}] did not converge: {exc}",
                diagnostics={"interval": (a, b)},
            ) from exc
    value, err = out[0], out[1]
    info = out[2]
    if len(out) > 3:
        raise QuadratureError(
            f"quadrature on [{a}, {b}] reported: {out[3]}",
            diagnostics={"interval": (a, b), "subintervals": info.get("last"),
                         "value": value, "error": err},
        )
    return value, err
