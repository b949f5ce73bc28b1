"""Radial profile solver for the melting hedgehog ODE."""
