"""Crank-Nicolson compact scheme for 1-D convection-diffusion, with stability checks."""
