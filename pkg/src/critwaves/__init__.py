"""Small-amplitude steady water waves with critical layers over affine-vorticity laminar flows."""
